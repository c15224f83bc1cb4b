//! Torsion norms against α for both metrics on the configured space.

use std::collections::BTreeMap;

use densman::connections::{fisher_rao_norm, torsion};

use super::{at, draw, metric_label, model, per_trial};
use crate::config::{ExperimentConfig, MetricName};
use crate::report::{Cell, Check, Report, Table};
use crate::HarnessError;

/// Fraction of Otto trials with `α ≠ −1` whose torsion norm must reach
/// [`OTTO_NONZERO_LEVEL`].
const OTTO_NONZERO_FRACTION: f64 = 0.95;
const OTTO_NONZERO_LEVEL: f64 = 1e-3;

/// `(norm, fr_norm)` for each α, in config order.
type Row = Vec<(f64, f64)>;

pub fn run(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let seed = config.require_seed()?;
    let space = at("space", config.space.build())?;
    let alphas = &config.alphas;
    let reference = alphas.iter().position(|a| *a != -1.0);

    let mut table = Table::new(&["metric", "trial", "alpha", "norm", "fr_norm"]);
    let mut checks = Vec::new();
    for metric in [MetricName::FisherRao, MetricName::Otto] {
        let label = metric_label(metric);
        let m = model(metric);
        let rows: Vec<Row> = per_trial(config.trials, |t| {
            let name = format!("torsion_scan[{label}]");
            let d = at(&name, draw(&space, seed, t))?;
            let g = at(&name, m.at(&d.mu))?;
            alphas
                .iter()
                .map(|&alpha| {
                    let tor = at(&name, torsion(&*g, alpha, &d.a, &d.b))?;
                    Ok((at(&name, g.norm(&tor))?, at(&name, fisher_rao_norm(&d.mu, &tor))?))
                })
                .collect()
        })?;

        let mut linearity = 0.0f64;
        for (t, row) in rows.iter().enumerate() {
            for (&alpha, &(norm, fr)) in alphas.iter().zip(row) {
                table.push(vec![Cell::from(label), t.into(), alpha.into(), norm.into(), fr.into()]);
            }
            if let Some(r) = reference {
                let (base, scale) = (row[r].0, (alphas[r] + 1.0) / 2.0);
                for (&alpha, &(norm, _)) in alphas.iter().zip(row) {
                    let expected = base * ((alpha + 1.0) / 2.0 / scale).abs();
                    let dev = (norm - expected).abs();
                    if dev > 0.0 {
                        linearity = linearity.max(dev / expected.abs().max(f64::MIN_POSITIVE));
                    }
                }
            }
        }
        if reference.is_some() {
            checks.push(Check::at_most(format!("torsion_scan.linearity[{label}]"), linearity, 1e-12));
        }

        match metric {
            MetricName::FisherRao => {
                let worst = rows.iter().flatten().map(|p| p.1).fold(0.0, f64::max);
                checks.push(Check::at_most("torsion_scan.fisher_rao_zero", worst, 1e-10));
            }
            MetricName::Otto => {
                if let Some(i) = alphas.iter().position(|a| *a == -1.0) {
                    let worst = rows.iter().map(|r| r[i].0).fold(0.0, f64::max);
                    checks.push(Check::at_most("torsion_scan.otto_mixture_zero", worst, 0.0));
                }
                let generic: Vec<f64> = rows
                    .iter()
                    .flat_map(|r| alphas.iter().zip(r).filter(|(a, _)| **a != -1.0).map(|(_, p)| p.0))
                    .collect();
                if !generic.is_empty() {
                    let hits = generic.iter().filter(|n| **n >= OTTO_NONZERO_LEVEL).count();
                    checks.push(Check::at_least(
                        "torsion_scan.otto_nonzero_fraction",
                        hits as f64 / generic.len() as f64,
                        OTTO_NONZERO_FRACTION,
                    ));
                }
            }
        }
    }
    let tables = BTreeMap::from([("torsion_norms".to_string(), table)]);
    Ok(Report::new("torsion_scan", config.clone(), checks, tables))
}
