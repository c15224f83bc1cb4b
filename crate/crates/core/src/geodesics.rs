//! Geodesics in the mixture chart: `ρ̇ = v`, `v̇ = −Γ_ρ(v, v)`, integrated with
//! classical RK4.

use nalgebra::DVector;

use crate::connections::ConnectionSpec;
use crate::density::{check_same, Density, TangentVector};
use crate::error::{GeometryError, Result};

/// Densities at or below this value abort the integration.
pub const POSITIVITY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub mu: Density,
    pub velocity: TangentVector,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicComparison {
    pub times: Vec<f64>,
    /// `Σ |ρ_a − ρ_b| vol` at each time.
    pub distances: Vec<f64>,
    pub max_distance: f64,
}

fn guard(mu_rho: &DVector<f64>, time: f64) -> Result<()> {
    match mu_rho.iter().position(|r| !(*r > POSITIVITY_FLOOR)) {
        Some(index) => Err(GeometryError::GeodesicExit {
            time,
            index,
            value: mu_rho[index],
        }),
        None => Ok(()),
    }
}

fn density_at(mu0: &Density, rho: DVector<f64>, time: f64) -> Result<Density> {
    guard(&rho, time)?;
    Density::new(mu0.space(), rho)
}

fn acceleration(spec: &ConnectionSpec, mu: &Density, v: &TangentVector) -> Result<TangentVector> {
    if spec.is_flat_chart() {
        return Ok(TangentVector::zero(mu.space()));
    }
    let g = spec.model.at(mu)?;
    Ok(-&spec.christoffel(&*g, v, v)?)
}

/// States at `t_k = k T / steps`, `k = 0..=steps`.
pub fn integrate_geodesic(
    spec: &ConnectionSpec,
    mu0: &Density,
    v0: &TangentVector,
    t_end: f64,
    steps: usize,
) -> Result<Vec<GeodesicState>> {
    check_same(mu0.space(), v0.space())?;
    if steps == 0 {
        return Err(GeometryError::OutOfRange {
            name: "steps",
            value: 0.0,
        });
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(GeometryError::OutOfRange {
            name: "T",
            value: t_end,
        });
    }
    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(GeodesicState {
        mu: mu0.clone(),
        velocity: v0.clone(),
        time: 0.0,
    });

    if spec.is_flat_chart() {
        for k in 1..=steps {
            let t = k as f64 * h;
            let rho = mu0.rho() + v0.density() * t;
            out.push(GeodesicState {
                mu: density_at(mu0, rho, t)?,
                velocity: v0.clone(),
                time: t,
            });
        }
        return Ok(out);
    }

    let (mut rho, mut v) = (mu0.rho().clone(), v0.clone());
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * h;
        let mu = density_at(mu0, rho.clone(), t0)?;
        let a1 = acceleration(spec, &mu, &v)?;

        let v2 = &v + &a1.scaled(h / 2.0);
        let mu2 = density_at(mu0, &rho + v.density() * (h / 2.0), t0 + h / 2.0)?;
        let a2 = acceleration(spec, &mu2, &v2)?;

        let v3 = &v + &a2.scaled(h / 2.0);
        let mu3 = density_at(mu0, &rho + v2.density() * (h / 2.0), t0 + h / 2.0)?;
        let a3 = acceleration(spec, &mu3, &v3)?;

        let v4 = &v + &a3.scaled(h);
        let mu4 = density_at(mu0, &rho + v3.density() * h, t0 + h)?;
        let a4 = acceleration(spec, &mu4, &v4)?;

        let drho = (v.density() + (v2.density() + v3.density()) * 2.0 + v4.density()) * (h / 6.0);
        let dv = (a1.density() + (a2.density() + a3.density()) * 2.0 + a4.density()) * (h / 6.0);
        rho += drho;
        v = TangentVector::new(mu0.space(), v.density() + dv)?;
        let t = k as f64 * h;
        let mu = density_at(mu0, rho.clone(), t)?;
        rho = mu.rho().clone();
        out.push(GeodesicState {
            mu,
            velocity: v.clone(),
            time: t,
        });
    }
    Ok(out)
}

/// Integrates both connections from the same initial data and records the
/// L¹ distance between the densities at every step.
pub fn compare_geodesics(
    spec_a: &ConnectionSpec,
    spec_b: &ConnectionSpec,
    mu0: &Density,
    v0: &TangentVector,
    t_end: f64,
    steps: usize,
) -> Result<GeodesicComparison> {
    let ta = integrate_geodesic(spec_a, mu0, v0, t_end, steps)?;
    let tb = integrate_geodesic(spec_b, mu0, v0, t_end, steps)?;
    let vol = mu0.space().volumes();
    let distances: Vec<f64> = ta
        .iter()
        .zip(&tb)
        .map(|(x, y)| {
            (x.mu.rho() - y.mu.rho())
                .iter()
                .zip(vol)
                .map(|(d, w)| d.abs() * w)
                .sum()
        })
        .collect();
    Ok(GeodesicComparison {
        times: ta.iter().map(|s| s.time).collect(),
        max_distance: distances.iter().copied().fold(0.0, f64::max),
        distances,
    })
}
