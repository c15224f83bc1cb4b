//! Invariant suites on the configured space and metric.
//!
//! Checks that only hold exactly for a symmetric discrete metric (variational
//! Laplacian or graph) are skipped on compositional grids, where they hold
//! only up to O(h²). Dense checks run for at most [`DENSE_CHECK_CAP`]
//! vertices.

use std::collections::BTreeMap;
use std::sync::Arc;

use densman::connections::{
    amari_tensor, amari_tensor_fd, curvature_fd, d_tensor, duality_residual, duality_residual_pair,
    fisher_rao_norm, k_tensor, levi_civita_gamma, alpha_gamma, torsion, ConnectionSpec,
    OttoClosedForms,
};
use densman::density::{fisher_rao_inner, mixture_geodesic, project_mean_zero, radon_nikodym};
use densman::discretization::{divergence, gradient, pointwise_inner};
use densman::metric::{
    check_selfadjoint_positive, gateaux_phi_fd, gram_matrix, otto_gateaux_closed, tangent_basis,
};
use densman::{
    integrate_geodesic, EdgeField, LaplacianStyle, MuLaplacian, RegularMetric, ScalarField,
    SeededRng, Space, TangentVector,
};
use nalgebra::DVector;

use super::{at, draw, merge_worst, model, per_trial, rel, Draw, DENSE_CHECK_CAP};
use crate::config::{ExperimentConfig, MetricName};
use crate::report::{Check, Report, Table};
use crate::HarnessError;

/// Integration horizon and step counts for the geodesic checks.
const GEODESIC_T: f64 = 0.5;
const GEODESIC_STEPS: usize = 40;
/// Initial velocities are rescaled to this sup-norm of `dv/dμ`.
const VELOCITY_SCALE: f64 = 0.2;
/// The order check needs errors well above round-off: a longer, faster run.
const ORDER_T: f64 = 1.0;
const ORDER_VELOCITY_SCALE: f64 = 0.4;
const ORDER_STEPS: [usize; 3] = [8, 16, 32];

struct Setup<'a> {
    config: &'a ExperimentConfig,
    space: Arc<Space>,
    model: Arc<dyn RegularMetric>,
    seed: u64,
    /// Symmetric discrete metric: exact identities apply.
    exact: bool,
    dense: bool,
}

pub fn run(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let seed = config.require_seed()?;
    let space = at("space", config.space.build())?;
    let setup = Setup {
        config,
        model: model(config.metric),
        seed,
        exact: space.style() == LaplacianStyle::Variational,
        dense: space.vertex_count() <= DENSE_CHECK_CAP,
        space,
    };
    let groups = per_trial(config.trials, |t| trial(&setup, t))?;
    let mut checks = merge_worst(groups);
    if setup.space.is_grid() && setup.space.vertex_count() >= 16 {
        checks.extend(merge_worst(per_trial(config.trials, |t| style_agreement(&setup, t))?));
    }
    Ok(Report::new("verify", config.clone(), checks, BTreeMap::<String, Table>::new()))
}

fn trial(s: &Setup, t: usize) -> Result<Vec<Check>, HarnessError> {
    let d = at("draw", draw(&s.space, s.seed, t))?;
    let mut out = Vec::new();
    discretization_checks(s, t, &d, &mut out)?;
    density_checks(s, t, &d, &mut out)?;
    metric_checks(s, t, &d, &mut out)?;
    connection_checks(s, &d, &mut out)?;
    geodesic_checks(s, &d, &mut out)?;
    Ok(out)
}

fn fields(s: &Setup, t: usize) -> (DVector<f64>, DVector<f64>) {
    // a stream distinct from the one that produced the draw
    let mut r = SeededRng::for_trial(s.seed ^ 0x9e37_79b9_7f4a_7c15, t);
    (r.gaussian_field(&s.space), r.gaussian_field(&s.space))
}

fn discretization_checks(s: &Setup, t: usize, d: &Draw, out: &mut Vec<Check>) -> Result<(), HarnessError> {
    let mu = &d.mu;
    let (f, g) = fields(s, t);
    let lap = MuLaplacian::new(mu);
    let n = s.space.vertex_count();
    let lf = lap.apply(&f);
    let lg = lap.apply(&g);
    let scale = lf.amax().max(1.0);

    let kernel = lap.apply(&DVector::from_element(n, 1.7)).amax() / scale;
    out.push(Check::at_most("laplacian.kernel_constants", kernel, 1e-12));
    let mean = mu.integrate(&lf).abs() / mu.integrate(&lf.abs()).max(f64::MIN_POSITIVE);
    out.push(Check::at_most("laplacian.image_mean_zero", mean, 1e-12));
    let h = at("laplacian.round_trip", lap.solve(&lf))?;
    out.push(Check::at_most(
        "laplacian.round_trip",
        rel(&h, &f.add_scalar(-mu.integrate(&f))),
        1e-10,
    ));

    if s.exact {
        let lhs = mu.integrate(&lf.component_mul(&g));
        let rhs = mu.integrate(&lg.component_mul(&f));
        let sc = mu.integrate(&lf.component_mul(&g).abs()).max(f64::MIN_POSITIVE);
        out.push(Check::at_most("laplacian.self_adjoint", (lhs - rhs).abs() / sc, 1e-12));

        let ne = if s.space.is_grid() { n } else { s.space.edges().len() };
        let x = EdgeField(DVector::from_iterator(ne, g.iter().cycle().skip(1).take(ne).copied()));
        let ff = ScalarField(f.clone());
        let gf = at("divergence.adjoint", gradient(&s.space, &ff))?;
        let xg = at("divergence.adjoint", pointwise_inner(&s.space, &x, &gf, mu))?;
        let lhs = mu.integrate(&xg);
        let div = at("divergence.adjoint", divergence(&s.space, mu, &x))?;
        let rhs = -mu.integrate(&f.component_mul(&div));
        let sc = mu.integrate(&xg.abs()).max(f64::MIN_POSITIVE);
        out.push(Check::at_most("divergence.adjoint", (lhs - rhs).abs() / sc, 1e-12));
    }
    Ok(())
}

/// Compositional against variational Laplacian at `n`, `2n`, `4n`.
fn style_agreement(s: &Setup, t: usize) -> Result<Vec<Check>, HarnessError> {
    let name = "laplacian.style_agreement_ratio";
    let n = s.space.vertex_count();
    let mut gaps = Vec::new();
    for m in [n, 2 * n, 4 * n] {
        let cfg = s.config.space.refined(m).expect("grid");
        let space = at(name, cfg.build())?;
        let mut r = SeededRng::for_trial(s.seed, t);
        let mu = at(name, r.density(&space))?;
        let f = r.gaussian_field(&space);
        let var = at(name, MuLaplacian::with_style(&mu, LaplacianStyle::Variational))?.apply(&f);
        let comp = at(name, MuLaplacian::with_style(&mu, LaplacianStyle::Compositional))?.apply(&f);
        gaps.push((var - comp).amax());
    }
    let (r1, r2) = (gaps[0] / gaps[1], gaps[1] / gaps[2]);
    Ok(vec![
        Check::at_least(format!("{name}.min"), r1.min(r2), 3.2),
        Check::at_most(format!("{name}.max"), r1.max(r2), 4.8),
    ])
}

fn density_checks(s: &Setup, t: usize, d: &Draw, out: &mut Vec<Check>) -> Result<(), HarnessError> {
    let mu = &d.mu;
    out.push(Check::at_most("density.normalized", (mu.masses().sum() - 1.0).abs(), 1e-12));
    out.push(Check::above("density.positive", mu.rho().min(), 0.0));
    out.push(Check::at_most(
        "tangent.zero_mass",
        d.a.total_mass().abs() / d.a.l1().max(f64::MIN_POSITIVE),
        1e-12,
    ));

    let f = at("radon_nikodym", radon_nikodym(&d.a, mu))?;
    let back = at("radon_nikodym", TangentVector::from_function(mu, &f))?;
    out.push(Check::at_most("radon_nikodym.round_trip", rel(back.density(), d.a.density()), 1e-14));
    let scale = mu.integrate(&f.abs()).max(f64::MIN_POSITIVE);
    out.push(Check::at_most("radon_nikodym.mean_zero", mu.integrate(&f).abs() / scale, 1e-12));

    let ab = at("fisher_rao", fisher_rao_inner(mu, &d.a, &d.b))?;
    let ba = at("fisher_rao", fisher_rao_inner(mu, &d.b, &d.a))?;
    let aa = at("fisher_rao", fisher_rao_inner(mu, &d.a, &d.a))?;
    let bb = at("fisher_rao", fisher_rao_inner(mu, &d.b, &d.b))?;
    out.push(Check::at_most("fisher_rao.symmetry", (ab - ba).abs() / (aa * bb).sqrt(), 1e-14));
    out.push(Check::above("fisher_rao.positive", aa.min(bb), 0.0));

    let (field, _) = fields(s, t);
    let p = at("project_mean_zero", project_mean_zero(&ScalarField(field), mu))?;
    let pp = at("project_mean_zero", project_mean_zero(p.field(), mu))?;
    out.push(Check::at_most("project_mean_zero.idempotent", rel(pp.field(), p.field()), 1e-14));

    let mut r = SeededRng::for_trial(s.seed, t + 1);
    let mu1 = at("mixture_geodesic", r.density(&s.space))?;
    let mix = |x| at("mixture_geodesic", mixture_geodesic(mu, &mu1, x));
    let (m0, m14, m12) = (mix(0.0)?, mix(0.25)?, mix(0.5)?);
    let mid = (m0.rho() + m12.rho()) * 0.5;
    out.push(Check::at_most("mixture_geodesic.affine", rel(m14.rho(), &mid), 1e-14));
    Ok(())
}

fn metric_checks(s: &Setup, t: usize, d: &Draw, out: &mut Vec<Check>) -> Result<(), HarnessError> {
    let mu = &d.mu;
    let g = at("metric", s.model.at(mu))?;
    let phi = at("metric.phi_round_trip", g.phi(&d.a))?;
    let back = at("metric.phi_round_trip", g.phi_inverse(&phi))?;
    out.push(Check::at_most("metric.phi_round_trip", rel(back.density(), d.a.density()), 1e-10));
    out.push(Check::at_most(
        "metric.phi_zero_mass",
        phi.total_mass().abs() / phi.l1().max(f64::MIN_POSITIVE),
        1e-12,
    ));

    let aa = at("metric.positive", g.inner(&d.a, &d.a))?;
    let bb = at("metric.positive", g.inner(&d.b, &d.b))?;
    out.push(Check::above("metric.positive", aa.min(bb), 0.0));
    if s.exact {
        let ab = at("metric.symmetry", g.inner(&d.a, &d.b))?;
        let ba = at("metric.symmetry", g.inner(&d.b, &d.a))?;
        out.push(Check::at_most("metric.symmetry", (ab - ba).abs() / (aa * bb).sqrt(), 1e-12));
        let rep = at(
            "metric.selfadjoint_report",
            check_selfadjoint_positive(&*s.model, mu, 3, s.seed.wrapping_add(t as u64)),
        )?;
        out.push(Check::at_most("metric.selfadjoint_report.symmetry", rep.max_symmetry_residual, 1e-12));
        out.push(Check::above("metric.selfadjoint_report.rayleigh", rep.min_rayleigh_quotient, 0.0));
    }

    if s.dense {
        let m = at("metric.gram", gram_matrix(&*g))?;
        if s.exact {
            out.push(Check::at_most("metric.gram_symmetry", (&m - m.transpose()).amax() / m.amax(), 1e-12));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        out.push(Check::above("metric.gram_min_eigenvalue", eig.min() / eig.amax(), 0.0));
    }

    match s.config.metric {
        MetricName::FisherRao => {
            let fd = at("gateaux.fisher_rao_zero", gateaux_phi_fd(&*s.model, mu, &d.a, &d.b, s.config.fd_step))?;
            out.push(Check::at_most("gateaux.fisher_rao_zero", fd.density().amax(), 0.0));
        }
        MetricName::Otto => {
            let name = "gateaux.otto_closed_vs_fd";
            let closed = at(name, otto_gateaux_closed(mu, &d.a, &d.b))?;
            let fd = at(name, gateaux_phi_fd(&*s.model, mu, &d.a, &d.b, s.config.fd_step))?;
            out.push(Check::at_most(name, rel(fd.density(), closed.density()), 1e-6));

            let name = "gateaux.otto_richardson_ratio";
            let err = |h| -> Result<f64, HarnessError> {
                let fd = at(name, gateaux_phi_fd(&*s.model, mu, &d.a, &d.b, h))?;
                Ok(rel(fd.density(), closed.density()))
            };
            let ratio = err(2e-2)? / err(1e-2)?;
            out.push(Check::at_least(format!("{name}.min"), ratio, 3.2));
            out.push(Check::at_most(format!("{name}.max"), ratio, 4.8));

            let name = "gateaux.otto_linearity";
            let twice = at(name, otto_gateaux_closed(mu, &d.a.scaled(2.0), &d.b))?;
            out.push(Check::at_most(name, rel(twice.density(), &(closed.density() * 2.0)), 1e-12));
        }
    }
    Ok(())
}

fn connection_checks(s: &Setup, d: &Draw, out: &mut Vec<Check>) -> Result<(), HarnessError> {
    let (mu, a, b, c) = (&d.mu, &d.a, &d.b, &d.c);
    let g = at("connections", s.model.at(mu))?;
    let step = s.config.fd_step;

    if s.dense && s.exact {
        let name = "k_tensor.representation";
        let k = at(name, k_tensor(&*g, a, b))?;
        let mut worst = 0.0f64;
        for e in tangent_basis(&s.space) {
            let lhs = at(name, g.inner(&k, &e))?;
            let rhs = at(name, amari_tensor_fd(&*s.model, mu, a, b, &e, step))?;
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
        out.push(Check::at_most(name, worst, 1e-8));
    }

    let name = "torsion.linearity";
    let one = at(name, torsion(&*g, 1.0, a, b))?;
    let mut worst = 0.0f64;
    for &alpha in &s.config.alphas {
        let ta = at(name, torsion(&*g, alpha, a, b))?;
        let f = (alpha + 1.0) / 2.0;
        worst = worst.max(componentwise_deviation(ta.density(), &(one.density() * f)));
    }
    out.push(Check::at_most(name, worst, 1e-12));
    let rev = at("torsion.antisymmetry", torsion(&*g, 1.0, b, a))?;
    out.push(Check::at_most(
        "torsion.antisymmetry",
        (one.density() + rev.density()).amax() / one.density().amax().max(f64::MIN_POSITIVE),
        1e-12,
    ));

    match s.config.metric {
        MetricName::FisherRao => {
            let name = "torsion.fisher_rao_zero";
            let mut worst = 0.0f64;
            for &alpha in &s.config.alphas {
                worst = worst.max(at(name, fisher_rao_norm(mu, &at(name, torsion(&*g, alpha, a, b))?))?);
            }
            out.push(Check::at_most(name, worst, 1e-10));

            let name = "amari.fisher_rao_symmetric";
            let v = at(name, amari_tensor(&*g, a, b, c))?;
            let w = at(name, amari_tensor(&*g, b, c, a))?;
            let u = at(name, amari_tensor(&*g, c, b, a))?;
            let dev = (v - w).abs().max((v - u).abs()) / v.abs().max(1e-300);
            out.push(Check::at_most(name, dev, 1e-12));

            if s.dense {
                let name = "d_tensor.fisher_rao_equals_k";
                let dt = at(name, d_tensor(&*g, a, b))?;
                let k = at(name, k_tensor(&*g, a, b))?;
                out.push(Check::at_most(name, rel(dt.density(), k.density()), 1e-8));
            }
        }
        MetricName::Otto => {
            let z = at("torsion.otto_mixture_zero", torsion(&*g, -1.0, a, b))?;
            out.push(Check::at_most("torsion.otto_mixture_zero", z.density().amax(), 0.0));
            out.push(Check::above("torsion.otto_nonzero", one.density().amax(), 0.0));
            if s.space.is_grid() {
                let name = "closed_forms.levi_civita_combination";
                let cf = at(name, OttoClosedForms::new(mu, None))?;
                let combo = &(&at(name, cf.d(a, b))? - &at(name, cf.k(a, b))?) - &at(name, cf.k(b, a))?;
                out.push(Check::at_most(name, rel(at(name, cf.lc(a, b))?.density(), combo.scaled(0.5).density()), 1e-12));
            }
        }
    }

    if s.dense && s.exact {
        let name = "d_tensor.symmetric";
        let dab = at(name, d_tensor(&*g, a, b))?;
        let dba = at(name, d_tensor(&*g, b, a))?;
        out.push(Check::at_most(name, rel(dab.density(), dba.density()), 1e-9));

        let name = "levi_civita.torsion_free";
        let ab = at(name, levi_civita_gamma(&*g, a, b))?;
        let ba = at(name, levi_civita_gamma(&*g, b, a))?;
        out.push(Check::at_most(name, rel(ab.density(), ba.density()), 1e-10));
        if s.config.metric == MetricName::FisherRao {
            let name = "levi_civita.fisher_rao_alpha_zero";
            let a0 = at(name, alpha_gamma(&*g, 0.0, a, b))?;
            out.push(Check::at_most(name, rel(ab.density(), a0.density()), 1e-10));
        }
    }

    if s.exact {
        let name = "duality.alpha_pairs";
        let mut worst = 0.0f64;
        for &alpha in &s.config.alphas {
            worst = worst.max(at(name, duality_residual(&s.model, alpha, mu, a, b, c, step))?);
        }
        out.push(Check::at_most(name, worst, 1e-8));

        if s.dense {
            let name = "levi_civita.metric_compatible";
            let lc = ConnectionSpec::levi_civita(Arc::clone(&s.model));
            let r = at(name, duality_residual_pair(&lc, &lc, mu, a, b, c, step))?;
            out.push(Check::at_most(name, r, 1e-8));
        }

        let name = "curvature.alpha_one_flat";
        let spec = ConnectionSpec::alpha(Arc::clone(&s.model), 1.0);
        let r = at(name, curvature_fd(&spec, mu, a, b, c, step))?;
        out.push(Check::at_most(name, at(name, g.norm(&r))?, 1e-6));
    }
    let name = "curvature.mixture_zero";
    let r = at(name, curvature_fd(&ConnectionSpec::mixture(Arc::clone(&s.model)), mu, a, b, c, step))?;
    out.push(Check::at_most(name, r.density().amax(), 0.0));
    Ok(())
}

fn geodesic_checks(s: &Setup, d: &Draw, out: &mut Vec<Check>) -> Result<(), HarnessError> {
    let mu = &d.mu;
    let v = d.a.scaled(VELOCITY_SCALE / d.a.sup_ratio(mu).max(f64::MIN_POSITIVE));

    let name = "geodesic.mass_conservation";
    let mut specs: Vec<ConnectionSpec> = s
        .config
        .alphas
        .iter()
        .map(|&al| ConnectionSpec::alpha(Arc::clone(&s.model), al))
        .collect();
    if s.dense {
        specs.push(ConnectionSpec::levi_civita(Arc::clone(&s.model)));
    }
    let mut worst = 0.0f64;
    for spec in &specs {
        for st in at(name, integrate_geodesic(spec, mu, &v, GEODESIC_T, GEODESIC_STEPS))? {
            worst = worst
                .max((st.mu.masses().sum() - 1.0).abs())
                .max(st.velocity.total_mass().abs());
        }
    }
    out.push(Check::at_most(name, worst, 1e-12));

    let name = "geodesic.mixture_affine";
    let spec = ConnectionSpec::mixture(Arc::clone(&s.model));
    let tr = at(name, integrate_geodesic(&spec, mu, &v, GEODESIC_T, GEODESIC_STEPS))?;
    let end = tr.last().expect("nonempty").mu.clone();
    let mut worst = 0.0f64;
    for st in &tr {
        let line = at(name, mixture_geodesic(mu, &end, st.time / GEODESIC_T))?;
        worst = worst.max(rel(st.mu.rho(), line.rho()));
    }
    out.push(Check::at_most(name, worst, 1e-14));

    let name = "geodesic.rk4_order";
    let spec = ConnectionSpec::alpha(Arc::clone(&s.model), 0.0);
    let v = v.scaled(ORDER_VELOCITY_SCALE / VELOCITY_SCALE);
    let mut ends = Vec::new();
    for steps in ORDER_STEPS {
        let tr = at(name, integrate_geodesic(&spec, mu, &v, ORDER_T, steps))?;
        ends.push(tr.last().expect("nonempty").mu.rho().clone());
    }
    let order = ((&ends[0] - &ends[1]).amax() / (&ends[1] - &ends[2]).amax()).log2();
    out.push(Check::at_least(name, order, 3.8));
    Ok(())
}

/// Largest componentwise relative deviation of `x` from `y`; a nonzero `x`
/// where `y` vanishes counts as infinite.
fn componentwise_deviation(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    x.iter().zip(y.iter()).fold(0.0f64, |w, (x, y)| {
        if x == y {
            w
        } else if *y == 0.0 {
            f64::INFINITY
        } else {
            w.max((x - y).abs() / y.abs())
        }
    })
}
