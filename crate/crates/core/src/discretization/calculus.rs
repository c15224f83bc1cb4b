use nalgebra::DVector;

use super::{EdgeField, LaplacianStyle, ScalarField, Space, SpaceKind};
use crate::density::{check_same, Density};
use crate::error::{GeometryError, Result};

/// Graphs: `f_j − f_i` per oriented edge. Grids: central difference.
pub fn gradient(s: &Space, f: &ScalarField) -> Result<EdgeField> {
    s.check_len(f.len())?;
    Ok(EdgeField(gradient_raw(s, f)))
}

pub(crate) fn gradient_raw(s: &Space, f: &DVector<f64>) -> DVector<f64> {
    match s.kind() {
        SpaceKind::CycleGrid { spacing, .. } => central_difference(f, spacing),
        SpaceKind::WeightedGraph => {
            DVector::from_iterator(s.edges().len(), s.edges().iter().map(|e| f[e.j] - f[e.i]))
        }
    }
}

pub(crate) fn central_difference(f: &DVector<f64>, h: f64) -> DVector<f64> {
    let n = f.len();
    DVector::from_fn(n, |i, _| (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * h))
}

/// `div_μ X`, characterized by `∫ X(f) dμ = −∫ f div_μ(X) dμ`.
///
/// Exact adjoint of [`gradient`] on graphs and on variational grids; on
/// compositional grids it is `div_g X + ⟨X, grad ln ρ⟩` projected to μ-mean zero.
pub fn divergence(s: &std::sync::Arc<Space>, mu: &Density, x: &EdgeField) -> Result<ScalarField> {
    check_same(s, mu.space())?;
    let m = mu.masses();
    match s.kind() {
        SpaceKind::WeightedGraph => {
            check_edge_len(s, x)?;
            let mut out = DVector::zeros(s.vertex_count());
            for (k, e) in s.edges().iter().enumerate() {
                let flux = e.weight * 0.5 * (m[e.i] + m[e.j]) * x[k];
                out[e.i] += flux;
                out[e.j] -= flux;
            }
            Ok(ScalarField(out.component_div(&m)))
        }
        SpaceKind::CycleGrid { spacing: h, .. } => {
            s.check_len(x.len())?;
            let n = s.vertex_count();
            match s.style() {
                LaplacianStyle::Variational => {
                    let mx = m.component_mul(x);
                    Ok(ScalarField(DVector::from_fn(n, |k, _| {
                        (mx[(k + 1) % n] - mx[(k + n - 1) % n]) / (2.0 * h * m[k])
                    })))
                }
                LaplacianStyle::Compositional => {
                    let log_rho = mu.rho().map(f64::ln);
                    let raw = central_difference(x, h)
                        + x.component_mul(&central_difference(&log_rho, h));
                    let mean = mu.integrate(&raw);
                    Ok(ScalarField(raw.add_scalar(-mean)))
                }
            }
        }
    }
}

/// Pointwise `⟨X, Y⟩`. Grids: product of tangential components. Graphs: the
/// carré du champ `(1/(2μ_i)) Σ_j w_ij θ_ij X_ij Y_ij`, whose μ-integral on
/// gradients is the Dirichlet form of the variational Laplacian.
pub fn pointwise_inner(s: &Space, x: &EdgeField, y: &EdgeField, mu: &Density) -> Result<ScalarField> {
    Ok(ScalarField(pointwise_inner_raw(s, x, y, mu)?))
}

pub(crate) fn pointwise_inner_raw(
    s: &Space,
    x: &DVector<f64>,
    y: &DVector<f64>,
    mu: &Density,
) -> Result<DVector<f64>> {
    s.check_len(mu.rho().len())?;
    match s.kind() {
        SpaceKind::CycleGrid { .. } => {
            s.check_len(x.len())?;
            s.check_len(y.len())?;
            Ok(x.component_mul(y))
        }
        SpaceKind::WeightedGraph => {
            for v in [x, y] {
                if v.len() != s.edges().len() {
                    return Err(GeometryError::SizeMismatch {
                        expected: s.edges().len(),
                        got: v.len(),
                    });
                }
            }
            let m = mu.masses();
            let mut out: DVector<f64> = DVector::zeros(s.vertex_count());
            for (k, e) in s.edges().iter().enumerate() {
                let c = e.weight * 0.5 * (m[e.i] + m[e.j]) * x[k] * y[k];
                out[e.i] += c;
                out[e.j] += c;
            }
            Ok(DVector::from_fn(s.vertex_count(), |i, _| out[i] / (2.0 * m[i])))
        }
    }
}

fn check_edge_len(s: &Space, x: &DVector<f64>) -> Result<()> {
    if x.len() != s.edges().len() {
        return Err(GeometryError::SizeMismatch {
            expected: s.edges().len(),
            got: x.len(),
        });
    }
    Ok(())
}
