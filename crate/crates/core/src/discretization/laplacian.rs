use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::calculus::central_difference;
use super::{LaplacianStyle, ScalarField, Space, SpaceKind};
use crate::density::{check_same, Density};
use crate::error::{GeometryError, Result};

/// Vertex count up to which the inverse uses a dense LU factorization.
pub const DENSE_SOLVER_CAP: usize = 512;
/// Right-hand sides whose relative μ-mean exceeds this are rejected.
pub const MEAN_ZERO_TOLERANCE: f64 = 1e-10;
const ITERATIVE_TOLERANCE: f64 = 1e-12;
// true-residual acceptance after the Krylov recursion has converged
const ITERATIVE_ACCEPT: f64 = 1e-8;
const MAX_CORRECTIONS: usize = 200;

/// The μ-Laplacian at a fixed density, with a lazily built inverse.
///
/// Construct once per μ and reuse: every inverse application after the first
/// is a pair of triangular solves.
pub struct MuLaplacian {
    space: Arc<Space>,
    style: LaplacianStyle,
    masses: DVector<f64>,
    // grad ln ρ on compositional grids
    log_gradient: Option<DVector<f64>>,
    factor: OnceLock<Option<LU<f64, Dyn, Dyn>>>,
}

impl std::fmt::Debug for MuLaplacian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MuLaplacian")
            .field("style", &self.style)
            .field("n", &self.masses.len())
            .finish()
    }
}

impl MuLaplacian {
    /// Uses the style carried by the density's space.
    pub fn new(mu: &Density) -> Self {
        Self::with_style(mu, mu.space().style()).expect("space style is always supported")
    }

    pub fn with_style(mu: &Density, style: LaplacianStyle) -> Result<Self> {
        let space = Arc::clone(mu.space());
        let log_gradient = match (style, space.kind()) {
            (LaplacianStyle::Variational, _) => None,
            (LaplacianStyle::Compositional, SpaceKind::CycleGrid { spacing, .. }) => {
                Some(central_difference(&mu.rho().map(f64::ln), spacing))
            }
            (LaplacianStyle::Compositional, SpaceKind::WeightedGraph) => {
                return Err(GeometryError::StyleUnsupported)
            }
        };
        Ok(MuLaplacian {
            masses: mu.masses(),
            space,
            style,
            log_gradient,
            factor: OnceLock::new(),
        })
    }

    pub fn style(&self) -> LaplacianStyle {
        self.style
    }

    pub fn masses(&self) -> &DVector<f64> {
        &self.masses
    }

    fn mean(&self, f: &DVector<f64>) -> f64 {
        self.masses.dot(f)
    }

    /// `Δ_μ f`. The result is μ-mean-zero and annihilates constants.
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        match self.style {
            LaplacianStyle::Variational => self.variational(&self.masses, f).component_div(&self.masses),
            LaplacianStyle::Compositional => {
                let raw = self.compositional_raw(f);
                let mean = self.mean(&raw);
                raw.add_scalar(-mean)
            }
        }
    }

    // Σ_j w_ij θ_ij (f_j − f_i) with θ built from `theta_masses`
    fn variational(&self, theta_masses: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(f.len());
        for e in self.space.edges() {
            let flux = e.weight * 0.5 * (theta_masses[e.i] + theta_masses[e.j]) * (f[e.j] - f[e.i]);
            out[e.i] += flux;
            out[e.j] -= flux;
        }
        out
    }

    // Δ_g f + ⟨grad f, grad ln ρ⟩ before projection
    fn compositional_raw(&self, f: &DVector<f64>) -> DVector<f64> {
        let h = self.space.spacing().expect("compositional style lives on grids");
        let n = f.len();
        let lg = self.log_gradient.as_ref().expect("log gradient present");
        let lap_g = DVector::from_fn(n, |i, _| {
            (f[(i + 1) % n] - 2.0 * f[i] + f[(i + n - 1) % n]) / (h * h)
        });
        lap_g + central_difference(f, h).component_mul(lg)
    }

    /// Exact `d/dt Δ_{μ + t δ} f` at `t = 0`, for a mass perturbation `δ`
    /// (vertex masses, not densities).
    pub fn derivative(&self, dmasses: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        match self.style {
            LaplacianStyle::Variational => {
                let lap = self.variational(&self.masses, f).component_div(&self.masses);
                let dflux = self.variational(dmasses, f);
                DVector::from_fn(f.len(), |i, _| {
                    (dflux[i] - dmasses[i] * lap[i]) / self.masses[i]
                })
            }
            LaplacianStyle::Compositional => {
                let h = self.space.spacing().expect("grid");
                let dlog = central_difference(&dmasses.component_div(&self.masses), h);
                let dl = central_difference(f, h).component_mul(&dlog);
                let raw = self.compositional_raw(f);
                let shift = self.mean(&dl) + dmasses.dot(&raw);
                dl.add_scalar(-shift)
            }
        }
    }

    /// Dense matrix of `Δ_μ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.masses.len();
        let mut m = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for k in 0..n {
            e[k] = 1.0;
            m.set_column(k, &self.apply(&e));
            e[k] = 0.0;
        }
        m
    }

    /// The unique μ-mean-zero `h` with `Δ_μ h = r`.
    ///
    /// `r` must be μ-mean-zero up to [`MEAN_ZERO_TOLERANCE`] relative to
    /// `∫|r| dμ`; round-off drift below that is removed first.
    pub fn solve(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        if r.len() != self.masses.len() {
            return Err(GeometryError::SizeMismatch {
                expected: self.masses.len(),
                got: r.len(),
            });
        }
        let mean = self.mean(r);
        let scale = self.masses.dot(&r.abs());
        if mean.abs() > MEAN_ZERO_TOLERANCE * scale {
            return Err(GeometryError::NotMeanZero { mean, scale });
        }
        if scale == 0.0 {
            return Ok(DVector::zeros(r.len()));
        }
        let r = r.add_scalar(-mean);
        if self.masses.len() <= DENSE_SOLVER_CAP {
            self.solve_dense(&r)
        } else {
            match self.style {
                LaplacianStyle::Variational => self.solve_cg(&r),
                LaplacianStyle::Compositional => self.solve_defect_correction(&r),
            }
        }
    }

    fn solve_dense(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        let lu = self.factor.get_or_init(|| {
            let n = self.masses.len();
            let mut a = self.matrix();
            for i in 0..n {
                for k in 0..n {
                    a[(i, k)] += self.masses[k];
                }
            }
            let lu = a.lu();
            lu.is_invertible().then_some(lu)
        });
        let lu = lu.as_ref().ok_or(GeometryError::Singular)?;
        let mut h = lu.solve(r).ok_or(GeometryError::Singular)?;
        let m = self.mean(&h);
        h.add_scalar_mut(-m);
        Ok(h)
    }

    // CG on the symmetric form −M Δ_μ (M = diag μ), kernel = constants.
    fn solve_cg(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        let n = r.len();
        let op = |f: &DVector<f64>| -self.variational(&self.masses, f);
        let project = |v: &mut DVector<f64>| {
            let s = v.sum() / n as f64;
            v.add_scalar_mut(-s);
        };
        let b = -r.component_mul(&self.masses);
        let bnorm = b.norm();
        let mut x = DVector::zeros(n);
        let mut res = b.clone();
        let mut p = res.clone();
        let mut rr = res.dot(&res);
        let max_iter = 20 * n;
        let mut it = 0;
        while rr.sqrt() > ITERATIVE_TOLERANCE * bnorm && it < max_iter {
            let ap = op(&p);
            let alpha = rr / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            res.axpy(-alpha, &ap, 1.0);
            project(&mut res);
            let rr_new = res.dot(&res);
            p = &res + &p * (rr_new / rr);
            rr = rr_new;
            it += 1;
        }
        let m = self.mean(&x);
        x.add_scalar_mut(-m);
        self.accept(x, r, it)
    }

    // Defect correction preconditioned by the variational operator at the same
    // μ, which differs from the compositional one by O(h) on every mode.
    fn solve_defect_correction(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, it) = self.defect_correction(r)?;
        self.accept(x, r, it)
    }

    fn defect_correction(&self, r: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
        let pre = MuLaplacian {
            space: Arc::clone(&self.space),
            style: LaplacianStyle::Variational,
            masses: self.masses.clone(),
            log_gradient: None,
            factor: OnceLock::new(),
        };
        let rnorm = r.amax();
        let mut x = DVector::zeros(r.len());
        let mut it = 0;
        let mut previous = f64::INFINITY;
        loop {
            let mut defect = r - self.apply(&x);
            let m = self.mean(&defect);
            defect.add_scalar_mut(-m);
            let size = defect.amax();
            // stop at the tolerance, or once round-off keeps the defect from
            // shrinking (the 1/h² amplification sets a floor near 1e-11)
            if size <= ITERATIVE_TOLERANCE * rnorm || size > 0.5 * previous || it >= MAX_CORRECTIONS {
                break;
            }
            previous = size;
            x += pre.solve_cg(&defect)?;
            it += 1;
        }
        Ok((x, it))
    }

    fn accept(&self, x: DVector<f64>, r: &DVector<f64>, iterations: usize) -> Result<DVector<f64>> {
        let residual = (self.apply(&x) - r).amax();
        if residual > ITERATIVE_ACCEPT * r.amax().max(f64::MIN_POSITIVE) {
            return Err(GeometryError::SolverDiverged {
                iterations,
                residual,
            });
        }
        Ok(x)
    }
}

/// `Δ_μ f` in the style of the space.
pub fn mu_laplacian(s: &Arc<Space>, mu: &Density, f: &ScalarField) -> Result<ScalarField> {
    check_same(s, mu.space())?;
    s.check_len(f.len())?;
    Ok(ScalarField(MuLaplacian::new(mu).apply(f)))
}

/// Inverse of `Δ_μ` on μ-mean-zero functions.
pub fn solve_mu_laplacian(s: &Arc<Space>, mu: &Density, r: &ScalarField) -> Result<ScalarField> {
    check_same(s, mu.space())?;
    s.check_len(r.len())?;
    Ok(ScalarField(MuLaplacian::new(mu).solve(r)?))
}
