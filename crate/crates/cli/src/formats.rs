//! On-disk formats: scenario and solution JSON, run summaries, and the
//! parameter override file.
//!
//! Numbers are nautical miles, knots, and hours, except angles, which are
//! degrees in every file (they are radians inside the solver).

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crp_core::geom::Vec2;
use crp_core::model::{FlightSpec, Scenario, Sector, SolutionReport, SolverParams};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SectorFile {
    pub width: f64,
    pub height: f64,
    pub levels: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FlightFile {
    pub id: String,
    pub entry: [f64; 2],
    pub exit: [f64; 2],
    pub release: f64,
    pub speed: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScenarioFile {
    pub sector: SectorFile,
    pub flights: Vec<FlightFile>,
}

impl ScenarioFile {
    pub fn from_scenario(scenario: &Scenario<f64>) -> Self {
        let s = scenario.sector();
        ScenarioFile {
            sector: SectorFile {
                width: s.width,
                height: s.height,
                levels: s.level_count,
                t_start: s.t_start,
                t_end: s.t_end,
            },
            flights: scenario
                .flights()
                .iter()
                .map(|f| FlightFile {
                    id: f.id.clone(),
                    entry: [f.entry.x, f.entry.y],
                    exit: [f.exit.x, f.exit.y],
                    release: f.release_time,
                    speed: f.speed,
                })
                .collect(),
        }
    }

    pub fn into_scenario(self) -> anyhow::Result<Scenario<f64>> {
        let sector = Sector {
            width: self.sector.width,
            height: self.sector.height,
            level_count: self.sector.levels,
            t_start: self.sector.t_start,
            t_end: self.sector.t_end,
        };
        let flights = self
            .flights
            .into_iter()
            .map(|f| FlightSpec {
                id: f.id,
                entry: Vec2::new(f.entry[0], f.entry[1]),
                exit: Vec2::new(f.exit[0], f.exit[1]),
                release_time: f.release,
                speed: f.speed,
            })
            .collect();
        Scenario::new(sector, flights).context("scenario file failed validation")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionFlight {
    pub id: String,
    pub level: usize,
    pub theta_deg: f64,
    pub path_length: f64,
    pub extension: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IterationRow {
    pub i: usize,
    pub conflicting_flights: usize,
    pub violating_pairs: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionFile {
    pub flights: Vec<SolutionFlight>,
    pub unresolved: Vec<String>,
    pub iterations: Vec<IterationRow>,
}

impl SolutionFile {
    pub fn from_report(scenario: &Scenario<f64>, report: &SolutionReport<f64>) -> Self {
        SolutionFile {
            flights: report
                .per_flight
                .iter()
                .enumerate()
                .map(|(f, o)| SolutionFlight {
                    id: scenario.flight(f).id.clone(),
                    level: o.level,
                    theta_deg: o.theta.to_degrees(),
                    path_length: o.path_length,
                    extension: o.extension_ratio,
                })
                .collect(),
            unresolved: report
                .unresolved_flights
                .iter()
                .map(|&f| scenario.flight(f).id.clone())
                .collect(),
            iterations: report
                .per_iteration
                .iter()
                .map(|m| IterationRow {
                    i: m.iteration,
                    conflicting_flights: m.conflicting_flights,
                    violating_pairs: m.violating_pairs,
                })
                .collect(),
        }
    }
}

/// Per-run summary (written next to the solution; wall time is printed, not
/// written, so output trees stay byte-reproducible).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SummaryFile {
    pub flights: usize,
    pub iterations_used: usize,
    pub converged: bool,
    pub unresolved: usize,
    pub peak_simultaneous: usize,
    pub theta_zero_share: f64,
    pub mean_extension: f64,
}

/// Aggregates for a batch run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BatchSummaryFile {
    pub instances: usize,
    pub resolved_instances: usize,
    pub resolved_by_iteration_5: usize,
    pub mean_initial_conflict_fraction: f64,
    pub mean_peak_simultaneous: f64,
    pub theta_zero_share: f64,
    pub mean_extension: f64,
    pub max_extension: f64,
}

/// Optional parameter override file (human units: seconds and degrees).
/// Every field falls back to the built-in defaults; explicit command-line
/// flags win over the file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub separation_nmi: Option<f64>,
    pub margin_nmi: Option<f64>,
    pub v0_knots: Option<f64>,
    pub dt_seconds: Option<f64>,
    pub iterations: Option<usize>,
    /// Per-cluster dispersal quota per sweep (the `r` flag).
    pub r: Option<usize>,
    /// Per-level dispersal cap per iteration (the `big-r` flag).
    pub big_r: Option<usize>,
    pub theta_bound_deg: Option<f64>,
    pub eta0_deg: Option<f64>,
    pub gd_stop_threshold: Option<f64>,
    pub gd_speedup_threshold: Option<f64>,
    pub eta_up: Option<f64>,
    pub eta_down: Option<f64>,
    pub gd_max_steps: Option<usize>,
    pub fd_step_deg: Option<f64>,
    pub seed: Option<u64>,
}

impl ParamsFile {
    pub fn apply_to(&self, p: &mut SolverParams<f64>) {
        if let Some(v) = self.separation_nmi {
            p.separation = v;
        }
        if let Some(v) = self.margin_nmi {
            p.score_margin = v;
        }
        if let Some(v) = self.v0_knots {
            p.time_scale_speed = v;
        }
        if let Some(v) = self.dt_seconds {
            p.dt = v / 3600.0;
        }
        if let Some(v) = self.iterations {
            p.max_iterations = v;
        }
        if let Some(v) = self.r {
            p.disperse_quota = v;
        }
        if let Some(v) = self.big_r {
            p.disperse_cap = v;
        }
        if let Some(v) = self.theta_bound_deg {
            p.theta_low = -v.to_radians();
            p.theta_high = v.to_radians();
        }
        if let Some(v) = self.eta0_deg {
            p.eta0 = v.to_radians();
        }
        if let Some(v) = self.gd_stop_threshold {
            p.gd_stop_threshold = v;
        }
        if let Some(v) = self.gd_speedup_threshold {
            p.gd_speedup_threshold = v;
        }
        if let Some(v) = self.eta_up {
            p.eta_up = v;
        }
        if let Some(v) = self.eta_down {
            p.eta_down = v;
        }
        if let Some(v) = self.gd_max_steps {
            p.gd_max_steps = v;
        }
        if let Some(v) = self.fd_step_deg {
            p.fd_step = v.to_radians();
        }
        if let Some(v) = self.seed {
            p.rng_seed = v;
        }
    }
}
