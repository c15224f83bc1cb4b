//! Points and tangent vectors of the open probability simplex.
//!
//! Both [`Density`] and [`TangentVector`] are stored as densities with respect
//! to the space's fixed reference volume, so a constant array is a parallel
//! field of the mixture connection and mixture geodesics are straight lines in
//! these coordinates.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DVector;

use crate::discretization::{same_space, ScalarField, Space};
use crate::error::{GeometryError, Result};

/// Drift in total mass that constructors silently repair.
pub const NORMALIZATION_DRIFT: f64 = 1e-8;
/// Relative total-mass drift a tangent vector may carry before it is rejected.
pub const TANGENT_MASS_DRIFT: f64 = 1e-10;

/// A strictly positive probability measure `μ = ρ μ_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    space: Arc<Space>,
    rho: DVector<f64>,
}

impl Density {
    /// Checks positivity and normalization; a total-mass drift up to
    /// [`NORMALIZATION_DRIFT`] is renormalized away.
    pub fn new(space: &Arc<Space>, rho: DVector<f64>) -> Result<Self> {
        space.check_len(rho.len())?;
        if let Some((index, &value)) = rho
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return Err(GeometryError::NotPositive { index, value });
        }
        let mass = total_mass(space, &rho);
        if (mass - 1.0).abs() > NORMALIZATION_DRIFT {
            return Err(GeometryError::NotNormalized { mass });
        }
        let rho = if mass != 1.0 { rho / mass } else { rho };
        Ok(Density {
            space: Arc::clone(space),
            rho,
        })
    }

    /// Normalizes an arbitrary positive profile.
    pub fn normalized(space: &Arc<Space>, profile: DVector<f64>) -> Result<Self> {
        space.check_len(profile.len())?;
        let mass = total_mass(space, &profile);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(GeometryError::NotNormalized { mass });
        }
        Density::new(space, profile / mass)
    }

    pub fn uniform(space: &Arc<Space>) -> Self {
        let n = space.vertex_count();
        Density {
            space: Arc::clone(space),
            rho: DVector::from_element(n, 1.0 / space.total_volume()),
        }
    }

    /// From vertex masses `μ_i` (which must sum to one).
    pub fn from_masses(space: &Arc<Space>, masses: &[f64]) -> Result<Self> {
        space.check_len(masses.len())?;
        let rho = DVector::from_iterator(
            masses.len(),
            masses.iter().zip(space.volumes()).map(|(m, v)| m / v),
        );
        Density::new(space, rho)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// `dμ/dμ_g` per vertex.
    pub fn rho(&self) -> &DVector<f64> {
        &self.rho
    }

    /// Vertex masses `μ_i = ρ_i vol_i`.
    pub fn masses(&self) -> DVector<f64> {
        self.rho.component_mul(&volumes(&self.space))
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: &DVector<f64>) -> f64 {
        f.iter()
            .zip(self.rho.iter().zip(self.space.volumes()))
            .map(|(f, (r, v))| f * r * v)
            .sum()
    }

    /// `μ + t ν`, failing if it leaves the positive cone.
    pub fn perturbed(&self, nu: &TangentVector, t: f64) -> Result<Density> {
        check_same(&self.space, &nu.space)?;
        let rho = &self.rho + &nu.density * t;
        if rho.iter().any(|v| !(*v > 0.0)) {
            return Err(GeometryError::LeftPositiveCone { step: t });
        }
        Density::new(&self.space, rho)
    }
}

/// A signed measure of zero total mass, stored as its density w.r.t. the
/// reference volume.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    space: Arc<Space>,
    density: DVector<f64>,
}

impl TangentVector {
    /// Round-off mass drift (relative [`TANGENT_MASS_DRIFT`]) is removed by a
    /// constant shift; anything larger is an error.
    pub fn new(space: &Arc<Space>, density: DVector<f64>) -> Result<Self> {
        space.check_len(density.len())?;
        let mass = total_mass(space, &density);
        let scale = abs_mass(space, &density);
        if mass.abs() > TANGENT_MASS_DRIFT * scale.max(f64::MIN_POSITIVE) {
            return Err(GeometryError::NonzeroMass { mass });
        }
        let density = if mass != 0.0 {
            density.add_scalar(-mass / space.total_volume())
        } else {
            density
        };
        Ok(TangentVector {
            space: Arc::clone(space),
            density,
        })
    }

    pub fn zero(space: &Arc<Space>) -> Self {
        TangentVector {
            space: Arc::clone(space),
            density: DVector::zeros(space.vertex_count()),
        }
    }

    /// `ı_μ(f) = f μ` for a μ-mean-zero function `f`.
    pub fn from_function(mu: &Density, f: &DVector<f64>) -> Result<Self> {
        mu.space.check_len(f.len())?;
        TangentVector::new(&mu.space, f.component_mul(&mu.rho))
    }

    /// `r − (∫ r) μ`: the centered representative of an arbitrary signed
    /// measure, pairing identically with every tangent vector under Fisher-Rao.
    pub fn centered(mu: &Density, density: DVector<f64>) -> Result<Self> {
        mu.space.check_len(density.len())?;
        let mass = total_mass(&mu.space, &density);
        let density = density - mu.rho() * mass;
        Ok(TangentVector {
            space: Arc::clone(&mu.space),
            density,
        })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn density(&self) -> &DVector<f64> {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(&self.space, &self.density)
    }

    /// Total variation `Σ |ν_i|`.
    pub fn l1(&self) -> f64 {
        abs_mass(&self.space, &self.density)
    }

    /// `sup |dν/dμ|`.
    pub fn sup_ratio(&self, mu: &Density) -> f64 {
        self.density
            .iter()
            .zip(mu.rho.iter())
            .map(|(d, r)| (d / r).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> TangentVector {
        TangentVector {
            space: Arc::clone(&self.space),
            density: &self.density * c,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.density.iter().all(|v| *v == 0.0)
    }
}

impl Add for &TangentVector {
    type Output = TangentVector;
    fn add(self, rhs: &TangentVector) -> TangentVector {
        assert_eq!(self.density.len(), rhs.density.len(), "tangent size mismatch");
        TangentVector {
            space: Arc::clone(&self.space),
            density: &self.density + &rhs.density,
        }
    }
}

impl Sub for &TangentVector {
    type Output = TangentVector;
    fn sub(self, rhs: &TangentVector) -> TangentVector {
        assert_eq!(self.density.len(), rhs.density.len(), "tangent size mismatch");
        TangentVector {
            space: Arc::clone(&self.space),
            density: &self.density - &rhs.density,
        }
    }
}

impl Neg for &TangentVector {
    type Output = TangentVector;
    fn neg(self) -> TangentVector {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &TangentVector {
    type Output = TangentVector;
    fn mul(self, c: f64) -> TangentVector {
        self.scaled(c)
    }
}

/// A function `f` with `∫ f dμ = 0`, kept together with its μ.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanZeroField {
    field: ScalarField,
    mu: Density,
}

impl MeanZeroField {
    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn density(&self) -> &Density {
        &self.mu
    }

    /// `ı_μ(f)`.
    pub fn to_tangent(&self) -> TangentVector {
        TangentVector {
            space: Arc::clone(&self.mu.space),
            density: self.field.component_mul(&self.mu.rho),
        }
    }
}

/// Anything with a density w.r.t. the reference volume.
pub trait Measure {
    fn space(&self) -> &Arc<Space>;
    fn reference_density(&self) -> &DVector<f64>;
}

impl Measure for Density {
    fn space(&self) -> &Arc<Space> {
        &self.space
    }
    fn reference_density(&self) -> &DVector<f64> {
        &self.rho
    }
}

impl Measure for TangentVector {
    fn space(&self) -> &Arc<Space> {
        &self.space
    }
    fn reference_density(&self) -> &DVector<f64> {
        &self.density
    }
}

/// `dν/dμ`, the inverse of `ı_μ`.
pub fn radon_nikodym<M: Measure>(nu: &M, mu: &Density) -> Result<ScalarField> {
    check_same(nu.space(), &mu.space)?;
    Ok(ScalarField(nu.reference_density().component_div(&mu.rho)))
}

/// `∫ (dν₁/dμ)(dν₂/dμ) dμ`.
pub fn fisher_rao_inner(mu: &Density, nu1: &TangentVector, nu2: &TangentVector) -> Result<f64> {
    check_same(&mu.space, &nu1.space)?;
    check_same(&mu.space, &nu2.space)?;
    Ok(fisher_rao_raw(mu, &nu1.density, &nu2.density))
}

/// Fisher-Rao pairing of two raw signed-measure densities.
pub(crate) fn fisher_rao_raw(mu: &Density, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .zip(mu.rho.iter().zip(mu.space.volumes()))
        .map(|((x, y), (r, v))| x * y * v / r)
        .sum()
}

/// `f − ∫ f dμ`.
pub fn project_mean_zero(f: &ScalarField, mu: &Density) -> Result<MeanZeroField> {
    mu.space.check_len(f.len())?;
    let mean = mu.integrate(f);
    Ok(MeanZeroField {
        field: ScalarField(f.add_scalar(-mean)),
        mu: mu.clone(),
    })
}

/// `(1 − t) μ₀ + t μ₁`.
pub fn mixture_geodesic(mu0: &Density, mu1: &Density, t: f64) -> Result<Density> {
    check_same(&mu0.space, &mu1.space)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::OutOfRange { name: "t", value: t });
    }
    let rho = &mu0.rho * (1.0 - t) + &mu1.rho * t;
    Density::new(&mu0.space, rho)
}

pub(crate) fn check_same(a: &Arc<Space>, b: &Arc<Space>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(GeometryError::SpaceMismatch)
    }
}

fn volumes(space: &Space) -> DVector<f64> {
    DVector::from_column_slice(space.volumes())
}

fn total_mass(space: &Space, d: &DVector<f64>) -> f64 {
    d.iter().zip(space.volumes()).map(|(d, v)| d * v).sum()
}

fn abs_mass(space: &Space, d: &DVector<f64>) -> f64 {
    d.iter().zip(space.volumes()).map(|(d, v)| (d * v).abs()).sum()
}
