//! α = 0 against Levi-Civita geodesics for the configured metric.

use std::collections::BTreeMap;
use std::sync::Arc;

use densman::{compare_geodesics, ConnectionSpec, Density, GeodesicComparison, SeededRng, TangentVector};

use super::{at, metric_label, model, per_trial};
use crate::config::{ExperimentConfig, MetricName};
use crate::report::{Cell, Check, Report, Table};
use crate::HarnessError;

/// Random initial velocities are rescaled to this sup-norm of `dv/dμ`.
const VELOCITY_SCALE: f64 = 0.2;
const FISHER_RAO_GAP: f64 = 1e-8;
const OTTO_GAP: f64 = 1e-4;

pub fn run(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let space = at("space", config.space.build())?;
    let geo = config.geodesic.clone().unwrap_or_default();
    let m = model(config.metric);
    let alpha0 = ConnectionSpec::alpha(Arc::clone(&m), 0.0);
    let lc = ConnectionSpec::levi_civita(Arc::clone(&m));
    let name = "geodesic_compare";

    let explicit = geo.mu0.is_some() && geo.v0.is_some();
    let seed = if explicit { config.seed.unwrap_or(0) } else { config.require_seed()? };
    let runs = if explicit { 1 } else { config.trials };

    let initial = |t: usize| -> Result<(Density, TangentVector), HarnessError> {
        let mut r = SeededRng::for_trial(seed, t);
        let mu = match geo.initial_density(&space) {
            Some(mu) => at("geodesic.mu0", mu)?,
            None => at(name, r.density(&space))?,
        };
        let v = match geo.initial_velocity(&space) {
            Some(v) => at("geodesic.v0", v)?,
            None => {
                let v = at(name, r.tangent(&mu))?;
                v.scaled(VELOCITY_SCALE / v.sup_ratio(&mu).max(f64::MIN_POSITIVE))
            }
        };
        Ok((mu, v))
    };

    let comparisons: Vec<GeodesicComparison> = per_trial(runs, |t| {
        let (mu, v) = initial(t)?;
        at(name, compare_geodesics(&alpha0, &lc, &mu, &v, geo.t_end, geo.steps))
    })?;

    let mut table = Table::new(&["trial", "time", "distance"]);
    for (t, c) in comparisons.iter().enumerate() {
        for (time, dist) in c.times.iter().zip(&c.distances) {
            table.push(vec![Cell::from(t), (*time).into(), (*dist).into()]);
        }
    }
    let gaps: Vec<f64> = comparisons.iter().map(|c| c.max_distance).collect();
    let label = metric_label(config.metric);
    let check = match config.metric {
        MetricName::FisherRao => Check::at_most(
            format!("geodesic_compare.max_gap[{label}]"),
            gaps.iter().copied().fold(0.0, f64::max),
            FISHER_RAO_GAP,
        ),
        MetricName::Otto => Check::at_least(
            format!("geodesic_compare.max_gap[{label}]"),
            gaps.iter().copied().fold(f64::INFINITY, f64::min),
            OTTO_GAP,
        ),
    };
    let tables = BTreeMap::from([("distances".to_string(), table)]);
    Ok(Report::new("geodesic_compare", config.clone(), vec![check], tables))
}

