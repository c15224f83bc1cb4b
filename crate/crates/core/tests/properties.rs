//! Property tests over random connected weighted graphs and random inputs.

use std::sync::Arc;

use densman::connections::{
    amari_tensor, amari_tensor_fd, fisher_rao_norm, k_tensor, torsion, ConnectionSpec,
};
use densman::density::{fisher_rao_inner, radon_nikodym};
use densman::discretization::{divergence, gradient, pointwise_inner, MuLaplacian};
use densman::geodesics::integrate_geodesic;
use densman::metric::{gram_matrix, DEFAULT_FD_STEP};
use densman::{
    EdgeField, FisherRao, Otto, RegularMetric, ScalarField, SeededRng, Space, TangentVector,
};
use nalgebra::DVector;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct GraphCase {
    volumes: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    seed: u64,
}

// A ring (so the graph is connected) plus optional chords.
fn graph_case() -> impl Strategy<Value = GraphCase> {
    (3usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(0.2f64..3.0, n),
            prop::collection::vec(0.2f64..4.0, n),
            prop::collection::vec((0..n, 0..n, 0.2f64..4.0), 0..n),
            any::<u64>(),
        )
            .prop_map(move |(volumes, ring, chords, seed)| {
                let mut edges: Vec<(usize, usize, f64)> =
                    (0..n).map(|i| (i, (i + 1) % n, ring[i])).collect();
                for (i, j, w) in chords {
                    let key = (i.min(j), i.max(j));
                    if i != j && !edges.iter().any(|&(a, b, _)| (a.min(b), a.max(b)) == key) {
                        edges.push((i, j, w));
                    }
                }
                GraphCase { volumes, edges, seed }
            })
    })
}

fn build(case: &GraphCase) -> (Arc<Space>, SeededRng) {
    let space = Space::graph(case.volumes.clone(), &case.edges).unwrap();
    (space, SeededRng::new(case.seed))
}

fn max_rel(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x - y).amax() / y.amax().max(x.amax()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_kernel_and_mean(case in graph_case()) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        let lap = MuLaplacian::new(&mu);
        let n = space.vertex_count();
        let c = lap.apply(&DVector::from_element(n, 1.7));
        prop_assert!(c.amax() <= 1e-12);
        let f = rng.gaussian_field(&space);
        let lf = lap.apply(&f);
        prop_assert!(mu.integrate(&lf).abs() <= 1e-12 * mu.integrate(&lf.abs()).max(1.0));
        let h = lap.solve(&lf).unwrap();
        let f0 = f.add_scalar(-mu.integrate(&f));
        prop_assert!(max_rel(&h, &f0) <= 1e-9);
    }

    #[test]
    fn divergence_is_adjoint_to_gradient(case in graph_case()) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        let f = ScalarField(rng.gaussian_field(&space));
        let x = EdgeField(DVector::from_fn(space.edges().len(), |_, _| rng.gaussian()));
        let gf = gradient(&space, &f).unwrap();
        let lhs = mu.integrate(&pointwise_inner(&space, &x, &gf, &mu).unwrap());
        let div = divergence(&space, &mu, &x).unwrap();
        let rhs = -mu.integrate(&f.component_mul(&div));
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
        let c = gradient(&space, &ScalarField::constant(space.vertex_count(), 3.0)).unwrap();
        prop_assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn densities_and_tangents_are_well_formed(case in graph_case()) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        prop_assert!((mu.masses().sum() - 1.0).abs() <= 1e-14);
        prop_assert!(mu.rho().iter().all(|r| *r > 0.0));
        let t = rng.tangent(&mu).unwrap();
        prop_assert!(t.total_mass().abs() <= 1e-14);
        let f = radon_nikodym(&t, &mu).unwrap();
        let back = TangentVector::from_function(&mu, &f).unwrap();
        prop_assert!(max_rel(back.density(), t.density()) <= 1e-14);
    }

    #[test]
    fn metrics_are_symmetric_positive_definite(case in graph_case()) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        for model in [&FisherRao as &dyn RegularMetric, &Otto::default()] {
            let g = model.at(&mu).unwrap();
            let m = gram_matrix(&*g).unwrap();
            prop_assert!((&m - m.transpose()).amax() <= 1e-11 * m.amax());
            prop_assert!(m.clone().cholesky().is_some());
            let nu = rng.tangent(&mu).unwrap();
            let phi = g.phi(&nu).unwrap();
            prop_assert!(phi.total_mass().abs() <= 1e-12 * phi.l1().max(1e-300));
            let back = g.phi_inverse(&phi).unwrap();
            prop_assert!(max_rel(back.density(), nu.density()) <= 1e-10);
        }
    }

    #[test]
    fn fisher_rao_tensor_symmetries(case in graph_case()) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        let (a, b, c) = (rng.tangent(&mu).unwrap(), rng.tangent(&mu).unwrap(), rng.tangent(&mu).unwrap());
        let g = FisherRao.at(&mu).unwrap();
        for alpha in [-0.5, 0.0, 1.0, 2.0] {
            prop_assert!(fisher_rao_norm(&mu, &torsion(&*g, alpha, &a, &b).unwrap()).unwrap() <= 1e-10);
        }
        let v = amari_tensor(&*g, &a, &b, &c).unwrap();
        let scale = v.abs().max(1e-3);
        prop_assert!((amari_tensor(&*g, &b, &c, &a).unwrap() - v).abs() <= 1e-12 * scale.max(1.0));
        prop_assert!((amari_tensor(&*g, &c, &a, &b).unwrap() - v).abs() <= 1e-12 * scale.max(1.0));
        prop_assert!((fisher_rao_inner(&mu, &a, &b).unwrap() - fisher_rao_inner(&mu, &b, &a).unwrap()).abs() <= 1e-15);
    }

    #[test]
    fn otto_torsion_structure(case in graph_case()) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        let (a, b) = (rng.tangent(&mu).unwrap(), rng.tangent(&mu).unwrap());
        let g = Otto::default().at(&mu).unwrap();
        prop_assert!(torsion(&*g, -1.0, &a, &b).unwrap().is_zero());
        let t1 = torsion(&*g, 1.0, &a, &b).unwrap();
        let t3 = torsion(&*g, 3.0, &a, &b).unwrap();
        prop_assert_eq!(t3.density(), &(t1.density() * 2.0));
        let rev = torsion(&*g, 1.0, &b, &a).unwrap();
        prop_assert!((t1.density() + rev.density()).amax() <= 1e-14 * t1.density().amax().max(1e-300));
    }

    #[test]
    fn otto_k_represents_metric_derivative(case in graph_case()) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        let (a, b, c) = (rng.tangent(&mu).unwrap(), rng.tangent(&mu).unwrap(), rng.tangent(&mu).unwrap());
        let otto = Otto::default();
        let g = otto.at(&mu).unwrap();
        let lhs = g.inner(&k_tensor(&*g, &a, &b).unwrap(), &c).unwrap();
        let rhs = amari_tensor_fd(&otto, &mu, &a, &b, &c, DEFAULT_FD_STEP).unwrap();
        let scale = g.norm(&a).unwrap() * g.norm(&b).unwrap() * g.norm(&c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-7 * scale.max(lhs.abs()).max(1e-12), "{} {}", lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn geodesics_conserve_mass(case in graph_case(), alpha in -1.0f64..2.0) {
        let (space, mut rng) = build(&case);
        let mu = rng.density(&space).unwrap();
        // small enough to stay inside the simplex over unit time
        let v = rng.tangent(&mu).unwrap();
        let v = v.scaled(0.2 / v.sup_ratio(&mu).max(1e-12));
        let model: Arc<dyn RegularMetric> = Arc::new(Otto::default());
        let traj = integrate_geodesic(&ConnectionSpec::alpha(model, alpha), &mu, &v, 1.0, 20).unwrap();
        for s in &traj {
            prop_assert!((s.mu.masses().sum() - 1.0).abs() <= 1e-12);
            prop_assert!(s.velocity.total_mass().abs() <= 1e-12);
        }
    }
}
