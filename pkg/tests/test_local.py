import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from hyperhdg.basis import legendre_values, reference_basis
from hyperhdg.errors import DimensionMismatch, SingularGeometry, SingularLocalSystem
from hyperhdg.local import (
    assemble_local,
    condense,
    flux_functionals,
    project_edge_field,
    reconstruct,
)
from hyperhdg.hypergraph import HyperEdge


def make_edge(lengths, kappa=1.0):
    lengths = np.atleast_1d(np.asarray(lengths, float))
    d = lengths.size
    axes = np.zeros((d, 3))
    for a in range(d):
        axes[a, a] = lengths[a]
    return HyperEdge(id=0, corner=np.zeros(3), axes=axes, kappa=kappa)


def random_edge(rng):
    d = int(rng.integers(1, 4))
    lengths = rng.uniform(0.2, 3.0, size=d)
    kappa = float(rng.uniform(0.1, 10.0))
    return make_edge(lengths, kappa)


def test_p0_interval_condensed_matrix_closed_form():
    """Hand-eliminated 2x2+2 saddle system: S = (kappa/L + tau/2) [[1,-1],[-1,1]]."""
    for L, kappa, tau in [(1.0, 1.0, 1.0), (0.5, 2.0, 3.0), (2.0, 0.3, 0.1)]:
        loc = assemble_local(make_edge([L], kappa), reference_basis(1, 0), tau)
        S = condense(loc).S
        c = kappa / L + tau / 2.0
        assert np.max(np.abs(S - c * np.array([[1, -1], [-1, 1]]))) < 1e-13


def test_constant_trace_in_kernel_and_constant_reconstruction():
    rng = np.random.default_rng(42)
    for _ in range(25):
        edge = random_edge(rng)
        p = int(rng.integers(0, 4))
        tau = float(rng.uniform(0.1, 10.0))
        basis = reference_basis(edge.dim, p)
        loc = assemble_local(edge, basis, tau)
        cond = condense(loc)
        ones = np.zeros(loc.n_trace)
        ones[:: basis.n_face] = 1.0   # constant mode on each face
        assert np.linalg.norm(cond.S @ ones) < 1e-11 * max(1, np.linalg.norm(cond.S))
        U, Q = reconstruct(loc, cond, ones)
        expect = np.zeros(basis.n_scalar)
        expect[0] = 1.0
        assert np.max(np.abs(U - expect)) < 1e-11
        assert np.max(np.abs(Q)) < 1e-11


def test_symmetry_and_psd_100_random_edges():
    rng = np.random.default_rng(1234)
    for _ in range(100):
        edge = random_edge(rng)
        p = int(rng.integers(0, 3))
        tau = float(rng.uniform(0.1, 10.0))
        loc = assemble_local(edge, reference_basis(edge.dim, p), tau)
        S = condense(loc).S
        norm = np.linalg.norm(S)
        assert np.linalg.norm(S - S.T) <= 1e-12 * norm
        w = np.linalg.eigvalsh(0.5 * (S + S.T))
        assert w.min() > -1e-11 * norm


def test_kappa_tau_joint_scaling():
    """(U, cQ) solves the (c kappa, c tau) problem, so S scales linearly."""
    rng = np.random.default_rng(5)
    for _ in range(10):
        edge = random_edge(rng)
        p = int(rng.integers(0, 3))
        tau = float(rng.uniform(0.1, 2.0))
        c = float(rng.uniform(0.3, 5.0))
        basis = reference_basis(edge.dim, p)
        S1 = condense(assemble_local(edge, basis, tau)).S
        scaled = HyperEdge(id=0, corner=edge.corner, axes=edge.axes,
                           kappa=c * edge.kappa)
        S2 = condense(assemble_local(scaled, basis, c * tau)).S
        assert np.max(np.abs(S2 - c * S1)) < 1e-10 * np.max(np.abs(S1))


def test_kappa_only_scaling_d1_p1():
    """For d=1, p>=1 the stabilization drops out and S = kappa/L [[1,-1],[-1,1]]."""
    basis = reference_basis(1, 1)
    for L, kappa, tau in [(1.0, 1.0, 1.0), (0.7, 3.0, 12.0)]:
        S = condense(assemble_local(make_edge([L], kappa), basis, tau)).S
        assert np.max(np.abs(S - (kappa / L) * np.array([[1, -1], [-1, 1]]))) < 1e-12


def test_linear_reconstruction_interval():
    basis = reference_basis(1, 1)
    loc = assemble_local(make_edge([1.0]), basis, 1.0)
    cond = condense(loc)
    U, Q = reconstruct(loc, cond, np.array([0.0, 1.0]))
    assert np.allclose(U, [0.5, np.sqrt(3) / 6], atol=1e-13)   # U(x) = x
    assert np.allclose(Q, [[-1.0, 0.0]], atol=1e-13)           # Q = -u' = -1


def test_zero_data_zero_solution():
    loc = assemble_local(make_edge([1.0, 1.0]), reference_basis(2, 2), 1.0)
    cond = condense(loc)
    U, Q = reconstruct(loc, cond, np.zeros(loc.n_trace))
    assert np.max(np.abs(U)) == 0 or np.max(np.abs(U)) < 1e-14
    assert np.max(np.abs(Q)) < 1e-14


def test_two_point_source_lift():
    """f = 2 on the unit interval with zero traces: u = x(1-x), flux -+1.

    The numerical flux at each face is +1 exactly (conservation + symmetry);
    with p >= 2 the solution and flux are reproduced exactly.
    """
    f2 = lambda pts: np.full(np.atleast_2d(pts).shape[0], 2.0)
    for p in (1, 2, 3):
        basis = reference_basis(1, p)
        edge = make_edge([1.0])
        loc = assemble_local(edge, basis, 1.0)
        fhat = project_edge_field(edge, basis, f2)
        cond = condense(loc, f_coeffs=fhat)
        phi = flux_functionals(loc, cond, np.zeros(2), f_coeffs=fhat)
        assert np.allclose(phi, [1.0, 1.0], atol=1e-12)
        if p >= 2:
            U, Q = reconstruct(loc, cond, np.zeros(2), f_coeffs=fhat)
            x_exact = project_edge_field(edge, basis,
                                         lambda pts: pts[:, 0] * (1 - pts[:, 0]))
            q_exact = project_edge_field(edge, basis,
                                         lambda pts: 2 * pts[:, 0] - 1)
            assert np.max(np.abs(U - x_exact)) < 1e-12
            assert np.max(np.abs(Q[0] - q_exact)) < 1e-12


def _poly_eval(coeffs_1d, x, deriv=0):
    """Evaluate an orthonormal shifted-Legendre series (or derivatives)."""
    out = np.zeros_like(np.asarray(x, float))
    for k, c in enumerate(coeffs_1d):
        base = np.zeros(k + 1)
        base[k] = 1.0
        for _ in range(deriv):
            base = npleg.legder(base)
        out = out + c * np.sqrt(2 * k + 1) * (2.0**deriv) * npleg.legval(
            2 * np.asarray(x, float) - 1, base if base.size else [0.0]
        )
    return out


@pytest.mark.parametrize("d,p", [(1, 1), (1, 3), (2, 1), (2, 2), (3, 1)])
def test_p_exactness_random_polynomial(d, p):
    """A tensor polynomial of per-axis degree <= p is reproduced exactly."""
    rng = np.random.default_rng(100 * d + p)
    lengths = rng.uniform(0.4, 1.6, size=d)
    kappa = float(rng.uniform(0.5, 2.0))
    edge = make_edge(lengths, kappa)
    basis = reference_basis(d, p)
    coeffs_1d = [rng.normal(size=p + 1) for _ in range(d)]

    def u(pts):
        t = (np.atleast_2d(pts)[:, :d] - edge.corner[:d]) / lengths
        val = np.ones(t.shape[0])
        for a in range(d):
            val = val * _poly_eval(coeffs_1d[a], t[:, a])
        return val

    def f(pts):
        # -kappa * sum_a d^2u/ds_a^2 with s_a the arclength coordinate
        t = (np.atleast_2d(pts)[:, :d] - edge.corner[:d]) / lengths
        total = np.zeros(t.shape[0])
        for a in range(d):
            term = np.ones(t.shape[0])
            for b in range(d):
                term = term * _poly_eval(coeffs_1d[b], t[:, b], deriv=2 if b == a else 0)
            total += term / lengths[a] ** 2
        return -kappa * total

    fhat = project_edge_field(edge, basis, f)
    loc = assemble_local(edge, basis, 1.0)
    cond = condense(loc, f_coeffs=fhat)
    # exact trace coefficients per face
    lam = np.zeros(loc.n_trace)
    frule = basis.face_rule
    psi = basis.eval_face(frule.points)
    for face in range(2 * d):
        cellpts = basis.embed_face_points(face, frule.points)
        vals = u(edge.map_points(cellpts))
        lam[face * basis.n_face:(face + 1) * basis.n_face] = (
            psi * frule.weights) @ vals
    U, Q = reconstruct(loc, cond, lam, f_coeffs=fhat)
    u_hat = project_edge_field(edge, basis, u)
    assert np.max(np.abs(U - u_hat)) < 1e-10 * max(1.0, np.max(np.abs(u_hat)))


def test_local_conservation():
    """Numerical flux integrated over the boundary equals int_E f."""
    rng = np.random.default_rng(77)
    for _ in range(20):
        edge = random_edge(rng)
        p = int(rng.integers(0, 3))
        basis = reference_basis(edge.dim, p)
        tau = float(rng.uniform(0.2, 4.0))
        loc = assemble_local(edge, basis, tau)
        fhat = rng.normal(size=basis.n_scalar)
        cond = condense(loc, f_coeffs=fhat)
        lam = rng.normal(size=loc.n_trace)
        phi = flux_functionals(loc, cond, lam, f_coeffs=fhat)
        boundary_total = np.sum(phi[:: basis.n_face])
        interior_total = edge.measure * fhat[0]
        assert abs(boundary_total - interior_total) < 1e-11 * max(
            1.0, abs(interior_total)
        )


def test_error_paths():
    basis = reference_basis(1, 1)
    with pytest.raises(SingularLocalSystem):
        assemble_local(make_edge([1.0]), basis, 0.0)
    degenerate = HyperEdge(id=0, corner=np.zeros(3), axes=np.zeros((1, 3)))
    with pytest.raises(SingularGeometry):
        assemble_local(degenerate, basis, 1.0)
    loc = assemble_local(make_edge([1.0]), basis, 1.0)
    cond = condense(loc)
    with pytest.raises(DimensionMismatch):
        reconstruct(loc, cond, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        condense(loc, f_coeffs=np.zeros(5))
