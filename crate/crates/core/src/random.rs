//! Reproducible random inputs.
//!
//! The generator is SplitMix64 seeded with the raw 64-bit state. Derived
//! quantities are fixed so that another implementation can replay the same
//! sequence:
//!
//! * uniform: `(next_u64 >> 11) · 2⁻⁵³` in `[0, 1)`;
//! * gaussian: Box–Muller, cosine branch only, `u₁ = 1 − uniform`, `u₂ = uniform`,
//!   `z = sqrt(−2 ln u₁) cos(2π u₂)` (two uniforms per normal);
//! * gaussian field: iid normals per vertex on graphs; on cycle grids the smooth
//!   series `Σ_{k=1..4} (c_k cos kθ + s_k sin kθ)/k` with `θ = 2πx/L`, drawing
//!   `c_1, s_1, c_2, s_2, …` in that order, so the same seed yields the same
//!   function at every resolution;
//! * density: `exp(amplitude · field)` normalized;
//! * tangent vector: a field centered in `L²(μ)` and mapped through `f ↦ f μ`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rand_core::{Rng as _, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::density::{Density, TangentVector};
use crate::discretization::{Space, SpaceKind};
use crate::error::Result;

/// Fourier modes used for smooth random fields on grids.
pub const SMOOTH_MODES: usize = 4;
/// Log-amplitude of random densities.
pub const DENSITY_AMPLITUDE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SeededRng(SplitMix64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(SplitMix64::seed_from_u64(seed))
    }

    /// Independent stream for trial `index`: seeded with the `index`-th output
    /// of a generator seeded with `seed`.
    pub fn for_trial(seed: u64, index: usize) -> Self {
        let mut root = SplitMix64::seed_from_u64(seed);
        let mut s = 0;
        for _ in 0..=index {
            s = root.next_u64();
        }
        SeededRng::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn gaussian_field(&mut self, space: &Space) -> DVector<f64> {
        match space.kind() {
            SpaceKind::WeightedGraph => {
                DVector::from_fn(space.vertex_count(), |_, _| self.gaussian())
            }
            SpaceKind::CycleGrid { circumference, .. } => {
                let coeffs: Vec<(f64, f64)> = (1..=SMOOTH_MODES)
                    .map(|k| {
                        let c = self.gaussian() / k as f64;
                        let s = self.gaussian() / k as f64;
                        (c, s)
                    })
                    .collect();
                let x = space.coordinates().expect("grid");
                DVector::from_iterator(
                    x.len(),
                    x.iter().map(|x| {
                        let th = TAU * x / circumference;
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(k, (c, s))| {
                                let kt = (k + 1) as f64 * th;
                                c * kt.cos() + s * kt.sin()
                            })
                            .sum::<f64>()
                    }),
                )
            }
        }
    }

    pub fn density(&mut self, space: &std::sync::Arc<Space>) -> Result<Density> {
        let field = self.gaussian_field(space);
        Density::normalized(space, field.map(|v| (DENSITY_AMPLITUDE * v).exp()))
    }

    pub fn tangent(&mut self, mu: &Density) -> Result<TangentVector> {
        let field = self.gaussian_field(mu.space());
        let mean = mu.integrate(&field);
        TangentVector::from_function(mu, &field.add_scalar(-mean))
    }
}
