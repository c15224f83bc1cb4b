//! Regular Riemannian metrics `G_μ(A, B) = ⟨Φ_μ(A), B⟩^FR`.
//!
//! A [`RegularMetric`] is localized at a density with [`RegularMetric::at`],
//! which builds whatever per-μ state is needed (for Otto, the factorized
//! μ-Laplacian). All tensor computations at a fixed μ go through the
//! resulting [`LocalMetric`].

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::density::{check_same, fisher_rao_inner, Density, TangentVector};
use crate::discretization::{LaplacianStyle, MuLaplacian, Space};
use crate::error::{GeometryError, Result};
use crate::random::SeededRng;

/// Default relative finite-difference step for derivatives in μ.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

pub trait RegularMetric: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Evaluation context at `mu`.
    fn at(&self, mu: &Density) -> Result<Box<dyn LocalMetric>>;
}

/// A regular metric frozen at one density.
pub trait LocalMetric: Send + Sync {
    fn density(&self) -> &Density;

    /// `Φ_μ(ν)`.
    fn phi(&self, nu: &TangentVector) -> Result<TangentVector>;

    /// `Φ_μ⁻¹(ν)`.
    fn phi_inverse(&self, nu: &TangentVector) -> Result<TangentVector>;

    /// `∂_{dir} Φ_μ(arg)`: derivative of `μ ↦ Φ_μ(arg)` along `dir`, holding
    /// the signed measure `arg` fixed.
    fn gateaux_phi(&self, dir: &TangentVector, arg: &TangentVector) -> Result<TangentVector>;

    /// `G_μ(a, b)`.
    fn inner(&self, a: &TangentVector, b: &TangentVector) -> Result<f64> {
        fisher_rao_inner(self.density(), &self.phi(a)?, b)
    }

    fn norm(&self, a: &TangentVector) -> Result<f64> {
        Ok(self.inner(a, a)?.max(0.0).sqrt())
    }
}

/// `Φ = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FisherRao;

/// `Φ_μ = −ı_μ ∘ Δ_μ⁻¹ ∘ ı_μ⁻¹`. With `style: None` the space's own Laplacian
/// style is used.
#[derive(Debug, Clone, Copy, Default)]
pub struct Otto {
    pub style: Option<LaplacianStyle>,
}

pub fn fisher_rao_model() -> FisherRao {
    FisherRao
}

pub fn otto_model(style: Option<LaplacianStyle>) -> Otto {
    Otto { style }
}

struct FisherRaoAt {
    mu: Density,
}

impl RegularMetric for FisherRao {
    fn name(&self) -> &'static str {
        "fisher_rao"
    }

    fn at(&self, mu: &Density) -> Result<Box<dyn LocalMetric>> {
        Ok(Box::new(FisherRaoAt { mu: mu.clone() }))
    }
}

impl LocalMetric for FisherRaoAt {
    fn density(&self) -> &Density {
        &self.mu
    }

    fn phi(&self, nu: &TangentVector) -> Result<TangentVector> {
        check_same(self.mu.space(), nu.space())?;
        Ok(nu.clone())
    }

    fn phi_inverse(&self, nu: &TangentVector) -> Result<TangentVector> {
        check_same(self.mu.space(), nu.space())?;
        Ok(nu.clone())
    }

    fn gateaux_phi(&self, dir: &TangentVector, arg: &TangentVector) -> Result<TangentVector> {
        check_same(self.mu.space(), dir.space())?;
        check_same(self.mu.space(), arg.space())?;
        Ok(TangentVector::zero(self.mu.space()))
    }

    fn inner(&self, a: &TangentVector, b: &TangentVector) -> Result<f64> {
        fisher_rao_inner(&self.mu, a, b)
    }
}

/// Otto metric at a fixed density.
pub struct OttoAt {
    mu: Density,
    lap: MuLaplacian,
}

impl OttoAt {
    pub fn new(mu: &Density, style: Option<LaplacianStyle>) -> Result<Self> {
        let style = style.unwrap_or(mu.space().style());
        Ok(OttoAt {
            mu: mu.clone(),
            lap: MuLaplacian::with_style(mu, style)?,
        })
    }

    pub fn laplacian(&self) -> &MuLaplacian {
        &self.lap
    }

    fn ratio(&self, nu: &TangentVector) -> Result<DVector<f64>> {
        check_same(self.mu.space(), nu.space())?;
        Ok(nu.density().component_div(self.mu.rho()))
    }
}

impl RegularMetric for Otto {
    fn name(&self) -> &'static str {
        "otto"
    }

    fn at(&self, mu: &Density) -> Result<Box<dyn LocalMetric>> {
        Ok(Box::new(OttoAt::new(mu, self.style)?))
    }
}

impl LocalMetric for OttoAt {
    fn density(&self) -> &Density {
        &self.mu
    }

    fn phi(&self, nu: &TangentVector) -> Result<TangentVector> {
        let u = self.lap.solve(&self.ratio(nu)?)?;
        TangentVector::new(self.mu.space(), -u.component_mul(self.mu.rho()))
    }

    fn phi_inverse(&self, nu: &TangentVector) -> Result<TangentVector> {
        let lf = self.lap.apply(&self.ratio(nu)?);
        TangentVector::new(self.mu.space(), -lf.component_mul(self.mu.rho()))
    }

    // Φ_μ(ν) = −u ρ with Δ_μ u = ν/ρ and ∫u dμ = 0. Differentiating both
    // constraints along ν¹ = m:
    //   Δ u̇ = −ν m/ρ² − (∂Δ) u,   ∫ u̇ dμ = −∫ u dν¹,
    //   ∂Φ = −u̇ ρ − u m.
    fn gateaux_phi(&self, dir: &TangentVector, arg: &TangentVector) -> Result<TangentVector> {
        check_same(self.mu.space(), dir.space())?;
        let space = self.mu.space();
        let rho = self.mu.rho();
        let m = dir.density();
        let vol = DVector::from_column_slice(space.volumes());
        let u = self.lap.solve(&self.ratio(arg)?)?;
        let df = -arg.density().component_mul(m).component_div(&rho.component_mul(rho));
        let rhs = df - self.lap.derivative(&m.component_mul(&vol), &u);
        let shift = u.dot(&m.component_mul(&vol));
        let du = self.lap.solve(&rhs)?.add_scalar(-shift);
        TangentVector::new(space, -du.component_mul(rho) - u.component_mul(m))
    }
}

/// `G_μ(ν₁, ν₂)`.
pub fn metric_inner(
    model: &dyn RegularMetric,
    mu: &Density,
    nu1: &TangentVector,
    nu2: &TangentVector,
) -> Result<f64> {
    model.at(mu)?.inner(nu1, nu2)
}

/// Relative step `step / sup|dν¹/dμ|`, so that `μ ± t ν¹` moves every vertex
/// by at most a fraction `step` of its mass.
pub fn scaled_step(mu: &Density, nu: &TangentVector, step: f64) -> f64 {
    let s = nu.sup_ratio(mu);
    if s > 0.0 {
        step / s
    } else {
        step
    }
}

/// Central difference `(Φ_{μ+tν¹}(ν²) − Φ_{μ−tν¹}(ν²)) / 2t` with
/// `t = step / sup|dν¹/dμ|`.
pub fn gateaux_phi_fd(
    model: &dyn RegularMetric,
    mu: &Density,
    nu1: &TangentVector,
    nu2: &TangentVector,
    step: f64,
) -> Result<TangentVector> {
    check_same(mu.space(), nu1.space())?;
    check_same(mu.space(), nu2.space())?;
    if nu1.is_zero() {
        return Ok(TangentVector::zero(mu.space()));
    }
    let t = scaled_step(mu, nu1, step);
    let plus = model.at(&mu.perturbed(nu1, t)?)?.phi(nu2)?;
    let minus = model.at(&mu.perturbed(nu1, -t)?)?.phi(nu2)?;
    Ok((&plus - &minus).scaled(0.5 / t))
}

/// Exact Gâteaux derivative of the Otto operator family.
pub fn otto_gateaux_closed(
    mu: &Density,
    nu1: &TangentVector,
    nu2: &TangentVector,
) -> Result<TangentVector> {
    OttoAt::new(mu, None)?.gateaux_phi(nu1, nu2)
}

/// Basis `δ_k/vol_k − δ_{n−1}/vol_{n−1}` of the tangent space.
pub fn tangent_basis(space: &Arc<Space>) -> Vec<TangentVector> {
    let n = space.vertex_count();
    let vol = space.volumes();
    (0..n - 1)
        .map(|k| {
            let mut d = DVector::zeros(n);
            d[k] = 1.0 / vol[k];
            d[n - 1] = -1.0 / vol[n - 1];
            TangentVector::new(space, d).expect("zero mass by construction")
        })
        .collect()
}

/// `M_ij = G(e_i, e_j)` over [`tangent_basis`].
pub fn gram_matrix(g: &dyn LocalMetric) -> Result<DMatrix<f64>> {
    let basis = tangent_basis(g.density().space());
    let k = basis.len();
    let phis = basis.iter().map(|e| g.phi(e)).collect::<Result<Vec<_>>>()?;
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = fisher_rao_inner(g.density(), &phis[i], &basis[j])?;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfAdjointReport {
    /// `max |G(a,b) − G(b,a)| / sqrt(G(a,a) G(b,b))`.
    pub max_symmetry_residual: f64,
    /// `min G(a,a) / ⟨a,a⟩^FR`.
    pub min_rayleigh_quotient: f64,
}

pub fn check_selfadjoint_positive(
    model: &dyn RegularMetric,
    mu: &Density,
    trials: usize,
    seed: u64,
) -> Result<SelfAdjointReport> {
    if trials == 0 {
        return Err(GeometryError::OutOfRange {
            name: "trials",
            value: 0.0,
        });
    }
    let g = model.at(mu)?;
    let mut rng = SeededRng::new(seed);
    let mut report = SelfAdjointReport {
        max_symmetry_residual: 0.0,
        min_rayleigh_quotient: f64::INFINITY,
    };
    for _ in 0..trials {
        let a = rng.tangent(mu)?;
        let b = rng.tangent(mu)?;
        let (gab, gba) = (g.inner(&a, &b)?, g.inner(&b, &a)?);
        let (gaa, gbb) = (g.inner(&a, &a)?, g.inner(&b, &b)?);
        let res = (gab - gba).abs() / (gaa * gbb).abs().sqrt().max(f64::MIN_POSITIVE);
        report.max_symmetry_residual = report.max_symmetry_residual.max(res);
        for (v, gvv) in [(&a, gaa), (&b, gbb)] {
            let q = gvv / fisher_rao_inner(mu, v, v)?;
            report.min_rayleigh_quotient = report.min_rayleigh_quotient.min(q);
        }
    }
    Ok(report)
}
