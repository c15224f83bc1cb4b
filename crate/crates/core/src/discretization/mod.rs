//! Finite sample spaces and the calculus on them.
//!
//! A [`Space`] is either a periodic 1-D grid (a discretized circle) or a
//! connected weighted graph. Each carries a reference volume per vertex and
//! supplies a gradient, a μ-divergence, the μ-Laplacian and its inverse on
//! μ-mean-zero functions, and a pointwise pairing of vector fields.
//!
//! Two discretizations of the μ-Laplacian are offered on grids:
//!
//! * **variational**: `(Δ_μ f)_i = (1/μ_i) Σ_j w_ij θ_ij (f_j − f_i)` with the
//!   arithmetic-mean edge measure `θ_ij = (μ_i + μ_j)/2`. Exactly self-adjoint
//!   in `L²(μ)` and linear in μ. Graphs always use this form.
//! * **compositional**: `Δ_μ h = Δ_g h + ⟨grad h, grad ln ρ⟩`, projected onto
//!   μ-mean-zero functions. Self-adjoint only up to `O(h²)`, but the chain and
//!   product rules used in closed-form manipulations hold exactly.

pub(crate) mod calculus;
mod laplacian;

use std::ops::Deref;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{GeometryError, Result};

pub use calculus::{divergence, gradient, pointwise_inner};
pub use laplacian::{mu_laplacian, solve_mu_laplacian, MuLaplacian, DENSE_SOLVER_CAP};

/// How the μ-Laplacian is discretized on a cycle grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianStyle {
    #[default]
    Variational,
    Compositional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceKind {
    /// Periodic grid on a circle; `spacing = circumference / n`.
    CycleGrid { circumference: f64, spacing: f64 },
    WeightedGraph,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// A connected finite sample space with reference volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    kind: SpaceKind,
    volumes: Vec<f64>,
    edges: Vec<Edge>,
    style: LaplacianStyle,
}

impl Space {
    /// Uniform periodic grid with `n` vertices on a circle of the given circumference.
    pub fn cycle(n: usize, circumference: f64, style: LaplacianStyle) -> Result<Arc<Space>> {
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if !(circumference > 0.0) || !circumference.is_finite() {
            return Err(GeometryError::NonPositive {
                what: "circumference",
                value: circumference,
            });
        }
        let h = circumference / n as f64;
        let edges = (0..n)
            .map(|i| Edge {
                i,
                j: (i + 1) % n,
                weight: 1.0 / (h * h),
            })
            .collect::<Vec<_>>();
        Ok(Arc::new(Space {
            kind: SpaceKind::CycleGrid {
                circumference,
                spacing: h,
            },
            volumes: vec![h; n],
            edges,
            style,
        }))
    }

    /// Connected weighted graph; edges are `(i, j, w)` with `w > 0`.
    pub fn graph(volumes: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Arc<Space>> {
        let n = volumes.len();
        if n < 2 {
            return Err(GeometryError::TooFewVertices(n));
        }
        for &v in &volumes {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GeometryError::NonPositive {
                    what: "reference volume",
                    value: v,
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GeometryError::InvalidEdge {
                    i,
                    j,
                    reason: "vertex index out of range",
                });
            }
            if i == j {
                return Err(GeometryError::InvalidEdge {
                    i,
                    j,
                    reason: "self-loop",
                });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GeometryError::NonPositive {
                    what: "edge weight",
                    value: w,
                });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(GeometryError::InvalidEdge {
                    i,
                    j,
                    reason: "duplicate edge",
                });
            }
            out.push(Edge { i, j, weight: w });
        }
        let mut neighbours = vec![Vec::new(); n];
        for e in &out {
            neighbours[e.i].push(e.j);
            neighbours[e.j].push(e.i);
        }

        // connectivity by DFS from vertex 0
        let mut reached = vec![false; n];
        let mut stack = vec![0];
        reached[0] = true;
        while let Some(v) = stack.pop() {
            for &u in &neighbours[v] {
                if !reached[u] {
                    reached[u] = true;
                    stack.push(u);
                }
            }
        }
        if let Some(v) = reached.iter().position(|r| !r) {
            return Err(GeometryError::Disconnected(v));
        }

        Ok(Arc::new(Space {
            kind: SpaceKind::WeightedGraph,
            volumes,
            edges: out,
            style: LaplacianStyle::Variational,
        }))
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.volumes.len()
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn style(&self) -> LaplacianStyle {
        self.style
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.kind, SpaceKind::CycleGrid { .. })
    }

    /// Grid spacing, `None` on graphs.
    pub fn spacing(&self) -> Option<f64> {
        match self.kind {
            SpaceKind::CycleGrid { spacing, .. } => Some(spacing),
            SpaceKind::WeightedGraph => None,
        }
    }

    /// Vertex coordinates `x_i = i h` on a grid.
    pub fn coordinates(&self) -> Option<Vec<f64>> {
        self.spacing()
            .map(|h| (0..self.vertex_count()).map(|i| i as f64 * h).collect())
    }

    /// Same space with a different Laplacian style. Graphs accept only the
    /// variational style.
    pub fn with_style(self: &Arc<Self>, style: LaplacianStyle) -> Result<Arc<Space>> {
        if style == self.style {
            return Ok(Arc::clone(self));
        }
        if !self.is_grid() {
            return Err(GeometryError::StyleUnsupported);
        }
        let mut s = (**self).clone();
        s.style = style;
        Ok(Arc::new(s))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.vertex_count() {
            return Err(GeometryError::SizeMismatch {
                expected: self.vertex_count(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Structural identity of two spaces (pointer-equal or equal contents).
pub fn same_space(a: &Arc<Space>, b: &Arc<Space>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub fn build_cycle_space(n: usize, circumference: f64, style: LaplacianStyle) -> Result<Arc<Space>> {
    Space::cycle(n, circumference, style)
}

pub fn build_graph_space(volumes: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Arc<Space>> {
    Space::graph(volumes, edges)
}

/// A real function on the vertices of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(pub DVector<f64>);

/// A vector field: one value per oriented edge on graphs, one tangential
/// component per vertex on grids.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField(pub DVector<f64>);

impl ScalarField {
    pub fn from_vec(v: Vec<f64>) -> Self {
        ScalarField(DVector::from_vec(v))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField(DVector::from_element(n, c))
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl EdgeField {
    pub fn from_vec(v: Vec<f64>) -> Self {
        EdgeField(DVector::from_vec(v))
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for ScalarField {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl Deref for EdgeField {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<DVector<f64>> for ScalarField {
    fn from(v: DVector<f64>) -> Self {
        ScalarField(v)
    }
}

impl From<DVector<f64>> for EdgeField {
    fn from(v: DVector<f64>) -> Self {
        EdgeField(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_has_uniform_spacing_and_volume() {
        let s = Space::cycle(4, 4.0, LaplacianStyle::Variational).unwrap();
        assert_eq!(s.spacing(), Some(1.0));
        assert_eq!(s.volumes(), &[1.0, 1.0, 1.0, 1.0]);

        let s = Space::cycle(64, std::f64::consts::TAU, LaplacianStyle::Compositional).unwrap();
        assert_eq!(s.spacing(), Some(std::f64::consts::TAU / 64.0));
        assert!((s.total_volume() - std::f64::consts::TAU).abs() < 1e-13);
        assert_eq!(s.style(), LaplacianStyle::Compositional);
    }

    #[test]
    fn cycle_rejects_bad_parameters() {
        assert_eq!(
            Space::cycle(2, 1.0, LaplacianStyle::Variational).unwrap_err(),
            GeometryError::TooFewVertices(2)
        );
        let err = Space::cycle(2, 1.0, LaplacianStyle::Variational).unwrap_err();
        assert!(err.to_string().contains("n too small"));
        assert!(Space::cycle(8, 0.0, LaplacianStyle::Variational).is_err());
        assert!(Space::cycle(8, -1.0, LaplacianStyle::Variational).is_err());
    }

    #[test]
    fn graph_builders() {
        let k2 = Space::graph(vec![1.0, 1.0], &[(0, 1, 1.0)]).unwrap();
        assert_eq!(k2.vertex_count(), 2);
        assert_eq!(k2.kind(), SpaceKind::WeightedGraph);

        let c4 = Space::graph(
            vec![1.0; 4],
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
        )
        .unwrap();
        assert_eq!(c4.edges().len(), 4);
    }

    #[test]
    fn graph_rejects_invalid_input() {
        let err = Space::graph(vec![1.0; 4], &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("disconnected"));
        assert!(matches!(
            Space::graph(vec![1.0; 2], &[(0, 1, 0.0)]),
            Err(GeometryError::NonPositive { .. })
        ));
        assert!(matches!(
            Space::graph(vec![1.0; 2], &[(0, 1, -2.0)]),
            Err(GeometryError::NonPositive { .. })
        ));
        assert!(Space::graph(vec![1.0; 2], &[(0, 0, 1.0), (0, 1, 1.0)]).is_err());
        assert!(Space::graph(vec![1.0; 2], &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        assert!(Space::graph(vec![1.0, -1.0], &[(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn graphs_refuse_compositional_style() {
        let k2 = Space::graph(vec![1.0, 1.0], &[(0, 1, 1.0)]).unwrap();
        assert_eq!(
            k2.with_style(LaplacianStyle::Compositional).unwrap_err(),
            GeometryError::StyleUnsupported
        );
        let grid = Space::cycle(8, 1.0, LaplacianStyle::Variational).unwrap();
        let comp = grid.with_style(LaplacianStyle::Compositional).unwrap();
        assert_eq!(comp.style(), LaplacianStyle::Compositional);
        assert!(!same_space(&grid, &comp));
    }
}
