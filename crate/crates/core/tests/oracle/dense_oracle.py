"""Independent dense oracle for the frozen constants in the Rust test suites.

Works on weighted graphs with the variational mu-Laplacian, directly in vertex
masses. The metric tensor is assembled densely and every derivative of it is
taken with JAX forward-mode autodiff, so nothing here shares a code path with
the hand-derived Gateaux derivatives used by the library.

Run:  python3 dense_oracle.py
"""

import jax
import jax.numpy as jnp
import numpy as np

jax.config.update("jax_enable_x64", True)

# C4: unit volumes, unit-weight 4-cycle.
N = 4
EI = jnp.array([0, 1, 2, 3])
EJ = jnp.array([1, 2, 3, 0])
EW = jnp.array([1.0, 1.0, 1.0, 1.0])

# Tangent basis e_k - e_{n-1}.
BASIS = jnp.array(np.vstack([np.eye(N - 1), -np.ones((1, N - 1))]))


# Signed incidence matrix, one row e_j - e_i per edge. Dense products only:
# the scatter-add formulation was miscompiled under jit(vmap(jvp)) in
# jax 0.6.2 (jitted D-tensor disagreed with eager evaluation).
INC = jnp.array(np.eye(N)[np.array(EJ)] - np.eye(N)[np.array(EI)])
ENDS = jnp.array(0.5 * (np.eye(N)[np.array(EI)] + np.eye(N)[np.array(EJ)]))


def laplacian_matrix(m):
    th = (ENDS @ m) * EW
    return -(INC.T @ (th[:, None] * INC)) / m[:, None]


def phi_otto(m, nu):
    lap = laplacian_matrix(m)
    u = jnp.linalg.solve(lap + jnp.outer(jnp.ones_like(m), m), nu / m)
    return -u * m


def phi_fr(m, nu):
    return nu


def make_metric(phi):
    def g(m, x, y):
        return jnp.sum(phi(m, x) * y / m)

    return g


def amari(g, m, a, b, c):
    # -(d/dt) G_{m + t a}(b, c) at t = 0
    return -jax.jvp(lambda mm: g(mm, b, c), (m,), (a,))[1]


def representer(g, m, functional):
    gram = jax.vmap(lambda x: jax.vmap(lambda y: g(m, x, y))(BASIS.T))(BASIS.T)
    rhs = jax.vmap(functional)(BASIS.T)
    return BASIS @ jnp.linalg.solve(gram.T, rhs)


def build(g):
    def k(m, a, b):
        return representer(g, m, lambda c: amari(g, m, a, b, c))

    def d(m, a, b):
        return representer(g, m, lambda c: amari(g, m, c, a, b))

    def curvature(alpha, m, a, b, c):
        gam = lambda mm, x, y: -0.5 * (alpha + 1) * k(mm, x, y)
        dab = jax.jvp(lambda mm: gam(mm, b, c), (m,), (a,))[1]
        dba = jax.jvp(lambda mm: gam(mm, a, c), (m,), (b,))[1]
        return dab - dba + gam(m, a, gam(m, b, c)) - gam(m, b, gam(m, a, c))

    return jax.jit(k), jax.jit(d), jax.jit(curvature, static_argnums=0)


def norm(g, m, x):
    return float(jnp.sqrt(g(m, x, x)))


def rk4_geodesic(accel, m0, v0, t_end, steps):
    dt = t_end / steps

    @jax.jit
    def step(state):
        m, v = state
        k1m, k1v = v, accel(m, v)
        k2m, k2v = v + 0.5 * dt * k1v, accel(m + 0.5 * dt * k1m, v + 0.5 * dt * k1v)
        k3m, k3v = v + 0.5 * dt * k2v, accel(m + 0.5 * dt * k2m, v + 0.5 * dt * k2v)
        k4m, k4v = v + dt * k3v, accel(m + dt * k3m, v + dt * k3v)
        return (m + dt / 6 * (k1m + 2 * k2m + 2 * k3m + k4m),
                v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v))

    state = (m0, v0)
    traj = [m0]
    for _ in range(steps):
        state = step(state)
        traj.append(state[0])
    return traj


# Pre-registered C4 geodesic instance (vertex masses; unit volumes).
GEO_MU0 = jnp.array([0.22, 0.31, 0.19, 0.28])
GEO_V0 = jnp.array([0.12, -0.05, 0.08, -0.15])


def main():
    g_otto, g_fr = make_metric(phi_otto), make_metric(phi_fr)
    k_o, d_o, curv_o = build(g_otto)
    k_f, d_f, curv_f = build(g_fr)
    rng = np.random.default_rng(7)

    # jit must agree with eager evaluation
    probe_m = jnp.array([0.1, 0.4, 0.2, 0.3])
    probe_a, probe_b = jnp.array([0.3, -0.1, 0.5, -0.7]), jnp.array([-0.2, 0.6, -0.1, -0.3])
    for f in (k_o, d_o):
        eager = f.__wrapped__(probe_m, probe_a, probe_b)
        assert np.allclose(f(probe_m, probe_a, probe_b), eager, rtol=1e-12, atol=1e-15), f

    draws = 200
    tor_min = {0.0: np.inf, 1.0: np.inf}
    curv_fr_min, curv_otto_max, lc_gap_min = np.inf, 0.0, np.inf
    for _ in range(draws):
        m = np.exp(rng.normal(size=N))
        m = jnp.array(m / m.sum())
        a, b, c = (jnp.array(x - x.mean()) for x in rng.normal(size=(3, N)))
        kab, kba = k_o(m, a, b), k_o(m, b, a)
        for al in tor_min:
            tor_min[al] = min(tor_min[al], norm(g_otto, m, 0.5 * (al + 1) * (kba - kab)))
        curv_fr_min = min(curv_fr_min, norm(g_fr, m, curv_f(0.0, m, a, b, c)))
        curv_otto_max = max(curv_otto_max, norm(g_otto, m, curv_o(1.0, m, a, b, c)))
        lc = -0.5 * kab - 0.5 * kba + 0.5 * d_o(m, a, b)
        lc_gap_min = min(lc_gap_min, norm(g_otto, m, lc + 0.5 * kab))

    print(f"otto torsion min norm over {draws} draws: {tor_min}")
    print("fisher-rao alpha=0 curvature min norm:", curv_fr_min)
    print("otto alpha=1 curvature max norm (autodiff):", curv_otto_max)
    print("otto LC minus alpha=0 min norm:", lc_gap_min)

    m = jnp.array([0.25] * 4)
    a = jnp.array([1.0, -1, 1, -1]) * m
    b = jnp.array([1.0, 1, -1, -1]) * m
    c = jnp.array([1.0, -1, -1, 1]) * m
    print("C4 Amari-Chentsov:", float(amari(g_fr, m, a, b, c)))

    for name, g, k, d in (("fisher_rao", g_fr, k_f, d_f), ("otto", g_otto, k_o, d_o)):
        ta = rk4_geodesic(lambda mm, v: 0.5 * k(mm, v, v), GEO_MU0, GEO_V0, 0.5, 200)
        tb = rk4_geodesic(lambda mm, v: k(mm, v, v) - 0.5 * d(mm, v, v), GEO_MU0, GEO_V0, 0.5, 200)
        gaps = [float(jnp.sum(jnp.abs(x - y))) for x, y in zip(ta, tb)]
        print(f"{name} geodesic max L1 gap: {max(gaps):.17e}")
        print(f"{name} alpha=0 terminal: {[f'{float(x):.17e}' for x in ta[-1]]}")
        print(f"{name} LC terminal: {[f'{float(x):.17e}' for x in tb[-1]]}")


if __name__ == "__main__":
    main()
