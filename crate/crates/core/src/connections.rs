//! Connections of a regular metric, expressed through their Christoffel term
//! relative to the mixture chart: for constant fields `∇_A B = Γ_μ(A, B)`.
//!
//! Tensor functions take a [`LocalMetric`], i.e. a metric already localized at
//! the density where they are evaluated. Operations that differentiate in μ
//! (curvature, duality) take the [`RegularMetric`] model instead.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::density::{check_same, fisher_rao_inner, Density, TangentVector};
use crate::discretization::calculus::{gradient_raw, pointwise_inner_raw};
use crate::discretization::{LaplacianStyle, MuLaplacian, DENSE_SOLVER_CAP};
use crate::error::{GeometryError, Result};
use crate::metric::{gram_matrix, scaled_step, tangent_basis, LocalMetric, RegularMetric};

/// Residual accepted when extracting the D-tensor representer.
pub const REPRESENTER_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectionVariant {
    /// `∇^(G,α)`.
    Alpha(f64),
    LeviCivita,
    /// `∇^m`, identical to `Alpha(-1.0)`.
    Mixture,
}

#[derive(Clone)]
pub struct ConnectionSpec {
    pub model: Arc<dyn RegularMetric>,
    pub variant: ConnectionVariant,
}

impl fmt::Debug for ConnectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionSpec")
            .field("model", &self.model.name())
            .field("variant", &self.variant)
            .finish()
    }
}

impl ConnectionSpec {
    pub fn alpha(model: Arc<dyn RegularMetric>, alpha: f64) -> Self {
        ConnectionSpec {
            model,
            variant: ConnectionVariant::Alpha(alpha),
        }
    }

    pub fn levi_civita(model: Arc<dyn RegularMetric>) -> Self {
        ConnectionSpec {
            model,
            variant: ConnectionVariant::LeviCivita,
        }
    }

    pub fn mixture(model: Arc<dyn RegularMetric>) -> Self {
        ConnectionSpec {
            model,
            variant: ConnectionVariant::Mixture,
        }
    }

    /// `α` of an α-family member (`-1` for the mixture connection).
    pub fn alpha_value(&self) -> Option<f64> {
        match self.variant {
            ConnectionVariant::Alpha(a) => Some(a),
            ConnectionVariant::Mixture => Some(-1.0),
            ConnectionVariant::LeviCivita => None,
        }
    }

    pub fn is_flat_chart(&self) -> bool {
        self.alpha_value() == Some(-1.0)
    }

    /// `Γ_μ(A, B)` with `g` localized at μ.
    pub fn christoffel(
        &self,
        g: &dyn LocalMetric,
        a: &TangentVector,
        b: &TangentVector,
    ) -> Result<TangentVector> {
        match self.variant {
            ConnectionVariant::Alpha(alpha) => alpha_gamma(g, alpha, a, b),
            ConnectionVariant::Mixture => alpha_gamma(g, -1.0, a, b),
            ConnectionVariant::LeviCivita => levi_civita_gamma(g, a, b),
        }
    }
}

fn ratio(mu: &Density, x: &TangentVector) -> Result<DVector<f64>> {
    check_same(mu.space(), x.space())?;
    Ok(x.density().component_div(mu.rho()))
}

/// `K(A, B) = Φ⁻¹(r − (∫r)μ)` with `r = (dA/dμ) Φ(B) − ∂_A Φ(B)`.
pub fn k_tensor(g: &dyn LocalMetric, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
    let mu = g.density();
    let av = ratio(mu, a)?;
    let phi_b = g.phi(b)?;
    // a·(Φ(B)/ρ)·ρ keeps ab = ba bitwise when Φ = 1
    let phi_ratio = phi_b.density().component_div(mu.rho());
    let r = av.component_mul(&phi_ratio).component_mul(mu.rho()) - g.gateaux_phi(a, b)?.density();
    g.phi_inverse(&TangentVector::centered(mu, r)?)
}

/// `𝒜(A; B, C) = G(K(A, B), C)`.
pub fn amari_tensor(
    g: &dyn LocalMetric,
    a: &TangentVector,
    b: &TangentVector,
    c: &TangentVector,
) -> Result<f64> {
    g.inner(&k_tensor(g, a, b)?, c)
}

/// `−d/dt G_{μ+tA}(B, C)` by central differences.
pub fn amari_tensor_fd(
    model: &dyn RegularMetric,
    mu: &Density,
    a: &TangentVector,
    b: &TangentVector,
    c: &TangentVector,
    step: f64,
) -> Result<f64> {
    Ok(-metric_derivative_fd(model, mu, a, b, c, step)?)
}

fn metric_derivative_fd(
    model: &dyn RegularMetric,
    mu: &Density,
    a: &TangentVector,
    b: &TangentVector,
    c: &TangentVector,
    step: f64,
) -> Result<f64> {
    check_same(mu.space(), a.space())?;
    if a.is_zero() {
        return Ok(0.0);
    }
    let t = scaled_step(mu, a, step);
    let plus = model.at(&mu.perturbed(a, t)?)?.inner(b, c)?;
    let minus = model.at(&mu.perturbed(a, -t)?)?.inner(b, c)?;
    Ok((plus - minus) / (2.0 * t))
}

/// `−(α+1)/2 · K(A, B)`.
pub fn alpha_gamma(
    g: &dyn LocalMetric,
    alpha: f64,
    a: &TangentVector,
    b: &TangentVector,
) -> Result<TangentVector> {
    check_same(g.density().space(), a.space())?;
    check_same(g.density().space(), b.space())?;
    if alpha == -1.0 {
        return Ok(TangentVector::zero(g.density().space()));
    }
    Ok(k_tensor(g, a, b)?.scaled(-(alpha + 1.0) / 2.0))
}

/// `(α+1)/2 · (K(B, A) − K(A, B))`.
pub fn torsion(
    g: &dyn LocalMetric,
    alpha: f64,
    a: &TangentVector,
    b: &TangentVector,
) -> Result<TangentVector> {
    check_same(g.density().space(), a.space())?;
    check_same(g.density().space(), b.space())?;
    if alpha == -1.0 || a == b {
        return Ok(TangentVector::zero(g.density().space()));
    }
    let diff = &k_tensor(g, b, a)? - &k_tensor(g, a, b)?;
    Ok(diff.scaled((alpha + 1.0) / 2.0))
}

/// The tangent vector `D` with `G(D, C) = 𝒜(C; A, B)` for every tangent `C`,
/// found by a dense solve against [`tangent_basis`].
pub fn d_tensor(g: &dyn LocalMetric, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
    let mu = g.density();
    let space = mu.space();
    check_same(space, a.space())?;
    check_same(space, b.space())?;
    let n = space.vertex_count();
    if n > DENSE_SOLVER_CAP {
        return Err(GeometryError::TooLarge {
            cap: DENSE_SOLVER_CAP,
            got: n,
        });
    }
    let basis = tangent_basis(space);
    let gram = gram_matrix(g)?;
    let rhs = DVector::from_iterator(
        basis.len(),
        basis
            .iter()
            .map(|e| amari_tensor(g, e, a, b))
            .collect::<Result<Vec<_>>>()?,
    );
    let gt = gram.transpose();
    let coeffs = gt.clone().lu().solve(&rhs).ok_or(GeometryError::Singular)?;
    let residual = (&gt * &coeffs - &rhs).amax();
    let scale = rhs.amax().max(gram.amax() * coeffs.amax());
    if !(residual <= REPRESENTER_TOLERANCE * scale.max(f64::MIN_POSITIVE)) {
        return Err(GeometryError::Singular);
    }
    let mut d = DVector::zeros(n);
    for (c, e) in coeffs.iter().zip(&basis) {
        d.axpy(*c, e.density(), 1.0);
    }
    TangentVector::new(space, d)
}

/// `−½K(A,B) − ½K(B,A) + ½D(A,B)`.
pub fn levi_civita_gamma(
    g: &dyn LocalMetric,
    a: &TangentVector,
    b: &TangentVector,
) -> Result<TangentVector> {
    let kab = k_tensor(g, a, b)?;
    let kba = k_tensor(g, b, a)?;
    let d = d_tensor(g, a, b)?;
    Ok((&(&d - &kab) - &kba).scaled(0.5))
}

/// `R(A,B)C = ∂_A Γ(B,C) − ∂_B Γ(A,C) + Γ(A, Γ(B,C)) − Γ(B, Γ(A,C))` for
/// constant fields, derivatives in μ by central differences.
pub fn curvature_fd(
    spec: &ConnectionSpec,
    mu: &Density,
    a: &TangentVector,
    b: &TangentVector,
    c: &TangentVector,
    step: f64,
) -> Result<TangentVector> {
    for v in [a, b, c] {
        check_same(mu.space(), v.space())?;
    }
    if spec.is_flat_chart() {
        return Ok(TangentVector::zero(mu.space()));
    }
    let g = spec.model.at(mu)?;
    let d_a = gamma_derivative_fd(spec, mu, a, b, c, step)?;
    let d_b = gamma_derivative_fd(spec, mu, b, a, c, step)?;
    let gbc = spec.christoffel(&*g, b, c)?;
    let gac = spec.christoffel(&*g, a, c)?;
    let quad = &spec.christoffel(&*g, a, &gbc)? - &spec.christoffel(&*g, b, &gac)?;
    // cancellation leaves round-off mass comparable to the result itself
    TangentVector::centered(mu, (&(&d_a - &d_b) + &quad).density().clone())
}

// ∂_dir Γ(x, y)
fn gamma_derivative_fd(
    spec: &ConnectionSpec,
    mu: &Density,
    dir: &TangentVector,
    x: &TangentVector,
    y: &TangentVector,
    step: f64,
) -> Result<TangentVector> {
    if dir.is_zero() {
        return Ok(TangentVector::zero(mu.space()));
    }
    let t = scaled_step(mu, dir, step);
    let mu_p = mu.perturbed(dir, t)?;
    let mu_m = mu.perturbed(dir, -t)?;
    let plus = spec.christoffel(&*spec.model.at(&mu_p)?, x, y)?;
    let minus = spec.christoffel(&*spec.model.at(&mu_m)?, x, y)?;
    TangentVector::centered(mu, (&plus - &minus).density() * (0.5 / t))
}

/// `|A G(B,C) − G(∇^α_A B, C) − G(B, ∇^{−α}_A C)|` for constant fields.
pub fn duality_residual(
    model: &Arc<dyn RegularMetric>,
    alpha: f64,
    mu: &Density,
    a: &TangentVector,
    b: &TangentVector,
    c: &TangentVector,
    step: f64,
) -> Result<f64> {
    duality_residual_pair(
        &ConnectionSpec::alpha(Arc::clone(model), alpha),
        &ConnectionSpec::alpha(Arc::clone(model), -alpha),
        mu,
        a,
        b,
        c,
        step,
    )
}

/// `|A G(B,C) − G(∇_A B, C) − G(B, ∇'_A C)|` for an arbitrary pair of
/// connections of the same metric; `(LC, LC)` tests metric compatibility.
pub fn duality_residual_pair(
    first: &ConnectionSpec,
    second: &ConnectionSpec,
    mu: &Density,
    a: &TangentVector,
    b: &TangentVector,
    c: &TangentVector,
    step: f64,
) -> Result<f64> {
    for v in [a, b, c] {
        check_same(mu.space(), v.space())?;
    }
    let model = &*first.model;
    let derivative = metric_derivative_fd(model, mu, a, b, c, step)?;
    let g = model.at(mu)?;
    let lhs = g.inner(&first.christoffel(&*g, a, b)?, c)?;
    let rhs = g.inner(b, &second.christoffel(&*g, a, c)?)?;
    Ok((derivative - lhs - rhs).abs())
}

/// Closed-form Otto tensors at a fixed density, built on the discrete
/// gradient, pointwise inner product and `Δ_μ⁻¹` of the chosen Laplacian
/// style. Writing `β_x = Δ_μ⁻¹ x`:
///
/// * K: `(ab + ⟨grad β_b, grad a⟩) μ`
/// * 𝒜: `∫ a ⟨grad β_b, grad β_c⟩ dμ`
/// * Tor: `(α+1)/2 (⟨grad β_a, grad b⟩ − ⟨grad β_b, grad a⟩) μ`
/// * D: `−Δ_μ⟨grad β_a, grad β_b⟩ μ`
/// * LC: `−½(2ab + Δ_μ⟨grad β_a, grad β_b⟩ + ⟨grad β_a, grad b⟩ + ⟨grad a, grad β_b⟩) μ`
///
/// Methods with a `_density` suffix return the bare density with respect to
/// μ, before any mass correction; the others return tangent vectors with the
/// residual total mass removed along μ.
pub struct OttoClosedForms {
    mu: Density,
    lap: MuLaplacian,
}

impl OttoClosedForms {
    pub fn new(mu: &Density, style: Option<LaplacianStyle>) -> Result<Self> {
        let style = style.unwrap_or(mu.space().style());
        Ok(OttoClosedForms {
            mu: mu.clone(),
            lap: MuLaplacian::with_style(mu, style)?,
        })
    }

    fn beta(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.lap.solve(x)
    }

    fn grad_inner(&self, f: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.mu.space();
        pointwise_inner_raw(s, &gradient_raw(s, f), &gradient_raw(s, h), &self.mu)
    }

    fn to_tangent(&self, density: DVector<f64>) -> Result<TangentVector> {
        TangentVector::centered(&self.mu, density.component_mul(self.mu.rho()))
    }

    pub fn k_density(&self, a: &TangentVector, b: &TangentVector) -> Result<DVector<f64>> {
        let (av, bv) = (ratio(&self.mu, a)?, ratio(&self.mu, b)?);
        Ok(av.component_mul(&bv) + self.grad_inner(&self.beta(&bv)?, &av)?)
    }

    pub fn k(&self, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
        self.to_tangent(self.k_density(a, b)?)
    }

    pub fn amari(&self, a: &TangentVector, b: &TangentVector, c: &TangentVector) -> Result<f64> {
        let av = ratio(&self.mu, a)?;
        let bb = self.beta(&ratio(&self.mu, b)?)?;
        let bc = self.beta(&ratio(&self.mu, c)?)?;
        Ok(self.mu.integrate(&av.component_mul(&self.grad_inner(&bb, &bc)?)))
    }

    pub fn torsion_density(
        &self,
        a: &TangentVector,
        b: &TangentVector,
        alpha: f64,
    ) -> Result<DVector<f64>> {
        let (av, bv) = (ratio(&self.mu, a)?, ratio(&self.mu, b)?);
        let t = self.grad_inner(&self.beta(&av)?, &bv)? - self.grad_inner(&self.beta(&bv)?, &av)?;
        Ok(t * ((alpha + 1.0) / 2.0))
    }

    pub fn torsion(&self, a: &TangentVector, b: &TangentVector, alpha: f64) -> Result<TangentVector> {
        self.to_tangent(self.torsion_density(a, b, alpha)?)
    }

    pub fn d_density(&self, a: &TangentVector, b: &TangentVector) -> Result<DVector<f64>> {
        let ba = self.beta(&ratio(&self.mu, a)?)?;
        let bb = self.beta(&ratio(&self.mu, b)?)?;
        Ok(-self.lap.apply(&self.grad_inner(&ba, &bb)?))
    }

    pub fn d(&self, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
        self.to_tangent(self.d_density(a, b)?)
    }

    pub fn lc_density(&self, a: &TangentVector, b: &TangentVector) -> Result<DVector<f64>> {
        let (av, bv) = (ratio(&self.mu, a)?, ratio(&self.mu, b)?);
        let (ba, bb) = (self.beta(&av)?, self.beta(&bv)?);
        let sum = av.component_mul(&bv) * 2.0
            + self.lap.apply(&self.grad_inner(&ba, &bb)?)
            + self.grad_inner(&ba, &bv)?
            + self.grad_inner(&av, &bb)?;
        Ok(sum * -0.5)
    }

    pub fn lc(&self, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
        self.to_tangent(self.lc_density(a, b)?)
    }

    /// `∫⟨grad β_a, grad β_b⟩ dμ`, the gradient form of the Otto inner product.
    pub fn gradient_inner(&self, a: &TangentVector, b: &TangentVector) -> Result<f64> {
        let ba = self.beta(&ratio(&self.mu, a)?)?;
        let bb = self.beta(&ratio(&self.mu, b)?)?;
        Ok(self.mu.integrate(&self.grad_inner(&ba, &bb)?))
    }
}

pub fn k_otto_closed(mu: &Density, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
    OttoClosedForms::new(mu, None)?.k(a, b)
}

pub fn amari_otto_closed(
    mu: &Density,
    a: &TangentVector,
    b: &TangentVector,
    c: &TangentVector,
) -> Result<f64> {
    OttoClosedForms::new(mu, None)?.amari(a, b, c)
}

pub fn torsion_otto_closed(
    mu: &Density,
    a: &TangentVector,
    b: &TangentVector,
    alpha: f64,
) -> Result<TangentVector> {
    OttoClosedForms::new(mu, None)?.torsion(a, b, alpha)
}

pub fn d_otto_closed(mu: &Density, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
    OttoClosedForms::new(mu, None)?.d(a, b)
}

pub fn lc_otto_closed(mu: &Density, a: &TangentVector, b: &TangentVector) -> Result<TangentVector> {
    OttoClosedForms::new(mu, None)?.lc(a, b)
}

/// Norm of a tangent vector in the localized metric.
pub fn metric_norm(g: &dyn LocalMetric, v: &TangentVector) -> Result<f64> {
    g.norm(v)
}

/// Fisher–Rao norm `‖dv/dμ‖_{L²(μ)}`.
pub fn fisher_rao_norm(mu: &Density, v: &TangentVector) -> Result<f64> {
    Ok(fisher_rao_inner(mu, v, v)?.max(0.0).sqrt())
}
