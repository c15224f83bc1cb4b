//! The four experiments. Each trial draws its inputs from its own seeded
//! stream, so results do not depend on how trials are scheduled.

use std::collections::BTreeMap;
use std::sync::Arc;

use densman::{Density, FisherRao, Otto, RegularMetric, SeededRng, Space, TangentVector};
use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::MetricName;
use crate::report::{Check, Comparison};
use crate::HarnessError;

pub mod convergence;
pub mod geodesic;
pub mod torsion_scan;
pub mod verify;

/// Dense checks (Gram matrices, basis sweeps, D-tensor) run up to this size.
pub const DENSE_CHECK_CAP: usize = 64;

pub(crate) fn model(name: MetricName) -> Arc<dyn RegularMetric> {
    match name {
        MetricName::FisherRao => Arc::new(FisherRao),
        MetricName::Otto => Arc::new(Otto::default()),
    }
}

pub(crate) fn metric_label(name: MetricName) -> &'static str {
    match name {
        MetricName::FisherRao => "fisher_rao",
        MetricName::Otto => "otto",
    }
}

/// Attaches the name of the check being computed to a geometry error.
pub(crate) fn at<T>(check: &str, r: densman::Result<T>) -> Result<T, HarnessError> {
    r.map_err(|source| HarnessError::Check {
        check: check.to_string(),
        source,
    })
}

pub(crate) struct Draw {
    pub mu: Density,
    pub a: TangentVector,
    pub b: TangentVector,
    pub c: TangentVector,
}

pub(crate) fn draw(space: &Arc<Space>, seed: u64, trial: usize) -> densman::Result<Draw> {
    let mut r = SeededRng::for_trial(seed, trial);
    let mu = r.density(space)?;
    let a = r.tangent(&mu)?;
    let b = r.tangent(&mu)?;
    let c = r.tangent(&mu)?;
    Ok(Draw { mu, a, b, c })
}

/// `max|x − y| / max|y|`, zero when both vanish.
pub(crate) fn rel(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let diff = (x - y).amax();
    if diff == 0.0 {
        0.0
    } else {
        diff / y.amax()
    }
}

/// Runs `f` for every trial in parallel, preserving trial order. The first
/// error in trial order wins, whatever the schedule.
pub(crate) fn per_trial<T, F>(trials: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
{
    let results: Vec<_> = (0..trials).into_par_iter().map(f).collect();
    results.into_iter().collect()
}

/// Keeps the worst value per check name: largest for upper bounds, smallest
/// for lower bounds. NaN is the worst of all.
pub(crate) fn merge_worst(groups: impl IntoIterator<Item = Vec<Check>>) -> Vec<Check> {
    let mut worst: BTreeMap<String, Check> = BTreeMap::new();
    for check in groups.into_iter().flatten() {
        match worst.get_mut(&check.name) {
            None => {
                worst.insert(check.name.clone(), check);
            }
            Some(w) => {
                let replace = check.value.is_nan()
                    || (!w.value.is_nan()
                        && match check.comparison {
                            Comparison::AtMost => check.value > w.value,
                            Comparison::AtLeast | Comparison::Above => check.value < w.value,
                        });
                if replace {
                    *w = check;
                }
            }
        }
    }
    worst.into_values().collect()
}
