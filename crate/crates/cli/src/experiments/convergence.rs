//! Definitional tensors against the Otto closed forms under grid refinement.

use std::collections::BTreeMap;

use densman::connections::{amari_tensor, d_tensor, k_tensor, levi_civita_gamma, torsion, OttoClosedForms};
use densman::discretization::DENSE_SOLVER_CAP;
use densman::{Otto, RegularMetric, Space};
use std::sync::Arc;

use super::{at, draw, per_trial, rel};
use crate::config::{ExperimentConfig, MetricName};
use crate::report::{Cell, Check, Report, Table};
use crate::HarnessError;

pub const QUANTITIES: [&str; 5] = ["K", "A", "Tor", "D", "LC"];
const RATIO_BAND: (f64, f64) = (3.2, 4.8);

fn invalid(field: &str, message: &str) -> HarnessError {
    HarnessError::Config {
        field: field.to_string(),
        line: 0,
        column: 0,
        message: message.to_string(),
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let seed = config.require_seed()?;
    if config.metric != MetricName::Otto {
        return Err(invalid("metric", "convergence compares the Otto closed forms; use \"otto\""));
    }
    let base = at("space", config.space.build())?;
    let n = base.vertex_count();
    let levels: Vec<usize> = vec![n, 2 * n, 4 * n];
    let spaces = levels
        .iter()
        .map(|&m| {
            let cfg = config
                .space
                .refined(m)
                .ok_or_else(|| invalid("space.kind", "convergence needs a cycle grid"))?;
            at("space", cfg.build())
        })
        .collect::<Result<Vec<_>, _>>()?;
    if 4 * n > DENSE_SOLVER_CAP {
        return Err(invalid("space.n", &format!("4n must not exceed {DENSE_SOLVER_CAP}")));
    }

    let errors: Vec<Vec<[f64; 5]>> = per_trial(config.trials, |t| {
        spaces.iter().map(|s| level_errors(s, seed, t)).collect()
    })?;

    let mut table = Table::new(&["trial", "n", "h", "K", "A", "Tor", "D", "LC"]);
    let mut ratios = Table::new(&["trial", "n", "K", "A", "Tor", "D", "LC"]);
    let mut lo = [f64::INFINITY; 5];
    let mut hi = [f64::NEG_INFINITY; 5];
    for (t, per_level) in errors.iter().enumerate() {
        for (l, e) in per_level.iter().enumerate() {
            let mut row = vec![Cell::from(t), levels[l].into(), spaces[l].spacing().unwrap_or(f64::NAN).into()];
            row.extend(e.iter().map(|v| Cell::from(*v)));
            table.push(row);
            if l > 0 {
                let mut row = vec![Cell::from(t), levels[l].into()];
                for q in 0..5 {
                    let r = per_level[l - 1][q] / e[q];
                    lo[q] = if r.is_nan() { r } else { lo[q].min(r) };
                    hi[q] = if r.is_nan() { r } else { hi[q].max(r) };
                    row.push(r.into());
                }
                ratios.push(row);
            }
        }
    }
    let mut checks = Vec::new();
    for (q, name) in QUANTITIES.iter().enumerate() {
        checks.push(Check::at_least(format!("convergence.ratio_min[{name}]"), lo[q], RATIO_BAND.0));
        checks.push(Check::at_most(format!("convergence.ratio_max[{name}]"), hi[q], RATIO_BAND.1));
    }
    let tables = BTreeMap::from([("errors".to_string(), table), ("ratios".to_string(), ratios)]);
    Ok(Report::new("convergence", config.clone(), checks, tables))
}

/// Relative errors of K, 𝒜, Tor (α = 1), D and LC at one resolution.
fn level_errors(space: &Arc<Space>, seed: u64, trial: usize) -> Result<[f64; 5], HarnessError> {
    let name = format!("convergence[n={}]", space.vertex_count());
    let d = at(&name, draw(space, seed, trial))?;
    let (mu, a, b, c) = (&d.mu, &d.a, &d.b, &d.c);
    let g = at(&name, Otto::default().at(mu))?;
    let cf = at(&name, OttoClosedForms::new(mu, None))?;
    let rho = mu.rho();
    let k = rel(at(&name, k_tensor(&*g, a, b))?.density(), &at(&name, cf.k_density(a, b))?.component_mul(rho));
    let exact = at(&name, cf.amari(a, b, c))?;
    let amari = (at(&name, amari_tensor(&*g, a, b, c))? - exact).abs() / exact.abs();
    let tor = rel(
        at(&name, torsion(&*g, 1.0, a, b))?.density(),
        &at(&name, cf.torsion_density(a, b, 1.0))?.component_mul(rho),
    );
    let dd = rel(at(&name, d_tensor(&*g, a, b))?.density(), at(&name, cf.d(a, b))?.density());
    let lc = rel(at(&name, levi_civita_gamma(&*g, a, b))?.density(), at(&name, cf.lc(a, b))?.density());
    Ok([k, amari, tor, dd, lc])
}
