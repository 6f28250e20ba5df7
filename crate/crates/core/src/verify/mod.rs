//! Deterministic verification suite.
//!
//! Thirteen numbered checks cross-validate the kernels, the Bergman slices,
//! the transform and the form projector against independent routes. Each
//! check yields one report line carrying every measured value next to the
//! budget it is gated on, e.g.
//!
//! ```text
//! C06 parseval PASS max-rel-err=3.114e-16<=1e-8
//! ```
//!
//! Random inputs come from per-check ChaCha streams, and every reduction runs
//! in task order, so the report bytes depend only on the configuration.

mod checks;
pub mod direct;

use std::fmt::Write as _;

use crate::config::{RunConfig, VerifyProfile};
use crate::error::SzegoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub name: &'static str,
    pub value: f64,
    pub budget: f64,
    pub bound: Bound,
}

impl Measurement {
    pub fn at_most(name: &'static str, value: f64, budget: f64) -> Self {
        Self {
            name,
            value,
            budget,
            bound: Bound::AtMost,
        }
    }

    pub fn at_least(name: &'static str, value: f64, budget: f64) -> Self {
        Self {
            name,
            value,
            budget,
            bound: Bound::AtLeast,
        }
    }

    /// NaN never passes.
    pub fn passes(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.value <= self.budget,
            Bound::AtLeast => self.value >= self.budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub measurements: Vec<Measurement>,
    /// Set when the check could not run to completion.
    pub error: Option<String>,
    pub skipped: bool,
}

impl CriterionReport {
    pub fn status(&self) -> Status {
        if self.skipped {
            Status::Skip
        } else if self.error.is_none() && self.measurements.iter().all(Measurement::passes) {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn line(&self) -> String {
        let mut out = format!("C{:02} {} {}", self.id, self.name, self.status());
        for m in &self.measurements {
            let op = match m.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            let _ = write!(out, " {}={:.3e}{op}{:e}", m.name, m.value, m.budget);
        }
        if let Some(e) = &self.error {
            let _ = write!(out, " {e}");
        }
        out
    }
}

fn describe_error(e: &SzegoError) -> String {
    match e {
        SzegoError::Budget { budget, detail } => format!("budget-violation={budget} ({detail})"),
        other => format!("error=\"{}\"", other.to_string().replace('"', "'")),
    }
}

pub const CRITERIA: [&str; 13] = [
    "gamma-moment",
    "kernel-routes",
    "phase-identities",
    "gaussian-reproducing",
    "bergman-slice",
    "parseval",
    "hardy-reproduction",
    "projector-algebra",
    "two-route-pairing",
    "form-projection",
    "vanishing",
    "cr-refinement",
    "determinism",
];

/// Runs one check (1-based id).
pub fn run_criterion(id: usize, cfg: &RunConfig) -> CriterionReport {
    let name = CRITERIA.get(id.wrapping_sub(1)).copied().unwrap_or("unknown");
    let quick = cfg.profile == VerifyProfile::Quick;
    let mut report = CriterionReport {
        id,
        name,
        measurements: Vec::new(),
        error: None,
        skipped: false,
    };
    let result = match id {
        1 => checks::gamma_moment(cfg, quick),
        2 => checks::kernel_routes(cfg, quick),
        3 => checks::phase_identities(cfg, quick),
        4 => checks::gaussian_reproducing(cfg, quick),
        5 => checks::bergman_slice(cfg, quick),
        6 => checks::parseval(cfg, quick),
        7 => checks::hardy_reproduction(cfg, quick),
        8 => checks::projector_algebra(cfg, quick),
        9 => checks::two_route_pairing(cfg, quick),
        10 => checks::form_projection(cfg, quick),
        11 => checks::vanishing(cfg, quick),
        12 => checks::cr_refinement(cfg, quick),
        13 if quick => {
            report.skipped = true;
            Ok(Vec::new())
        }
        13 => determinism(cfg),
        _ => Err(SzegoError::Usage(format!("no check numbered {id}"))),
    };
    match result {
        Ok(m) => report.measurements = m,
        Err(e) => report.error = Some(describe_error(&e)),
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub criteria: Vec<CriterionReport>,
}

impl VerifyReport {
    pub fn render(&self) -> String {
        self.criteria.iter().map(|c| c.line() + "\n").collect()
    }

    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.status() != Status::Fail)
    }
}

/// Runs every check in order on the current rayon pool.
pub fn run(cfg: &RunConfig) -> VerifyReport {
    VerifyReport {
        criteria: (1..=CRITERIA.len()).map(|id| run_criterion(id, cfg)).collect(),
    }
}

/// The quick profile's rendered report on a dedicated pool of `threads` workers.
pub fn quick_report(cfg: &RunConfig, threads: usize) -> crate::Result<String> {
    let quick = RunConfig {
        profile: VerifyProfile::Quick,
        ..cfg.clone()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SzegoError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(|| run(&quick).render()))
}

fn determinism(cfg: &RunConfig) -> crate::Result<Vec<Measurement>> {
    let reference = quick_report(cfg, 1)?;
    let mut mismatched = 0.0;
    for threads in [2, 3, 1] {
        if quick_report(cfg, threads)? != reference {
            mismatched += 1.0;
        }
    }
    Ok(vec![Measurement::at_most("mismatched-reruns", mismatched, 0.0)])
}
