"""Tensor-product Legendre bases and Gauss quadrature on the unit hypercube.

Scalar space on the reference cell [0,1]^d: tensor products of orthonormal
shifted Legendre polynomials of per-axis degree <= p, so the reference mass
matrix is the identity.  The flux space is d copies of the scalar space, the
face space is the same construction on [0,1]^(d-1).
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import UnsupportedOrder

MAX_GAUSS_POINTS = 16


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule on [0,1]^dim; weights sum to 1."""

    dim: int
    points: np.ndarray   # (n_points, dim)
    weights: np.ndarray  # (n_points,)


def gauss_rule(dim: int, n: int) -> QuadratureRule:
    """Tensor-product Gauss-Legendre rule with n points per axis on [0,1]^dim.

    Exact for polynomials of per-axis degree <= 2n-1.  dim = 0 yields the
    single point of the 0-cube with weight 1 (used for interval endpoints).
    """
    if not 1 <= n <= MAX_GAUSS_POINTS:
        raise UnsupportedOrder(f"gauss_rule supports 1 <= n <= {MAX_GAUSS_POINTS}, got {n}")
    if dim < 0:
        raise UnsupportedOrder(f"dimension must be >= 0, got {dim}")
    if dim == 0:
        return QuadratureRule(0, np.zeros((1, 0)), np.ones(1))
    x, w = npleg.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(1)
    for _ in range(dim):
        weights = np.outer(weights, w).ravel()
    return QuadratureRule(dim, points, weights)


def legendre_values(p: int, x: np.ndarray) -> np.ndarray:
    """Values of the orthonormal shifted Legendre polynomials 0..p at x in [0,1].

    Returns array of shape (p+1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    t = 2.0 * x - 1.0
    out = np.empty((p + 1,) + x.shape)
    for k in range(p + 1):
        c = np.zeros(k + 1)
        c[k] = 1.0
        out[k] = np.sqrt(2 * k + 1) * npleg.legval(t, c)
    return out


def legendre_derivatives(p: int, x: np.ndarray) -> np.ndarray:
    """d/dx of the orthonormal shifted Legendre polynomials, shape (p+1, len(x))."""
    x = np.asarray(x, dtype=float)
    t = 2.0 * x - 1.0
    out = np.zeros((p + 1,) + x.shape)
    for k in range(1, p + 1):
        c = np.zeros(k + 1)
        c[k] = 1.0
        out[k] = 2.0 * np.sqrt(2 * k + 1) * npleg.legval(t, npleg.legder(c))
    return out


def _tensor_indices(dim: int, p: int) -> np.ndarray:
    """Multi-indices of the tensor basis, shape (count, dim), C-order."""
    if dim == 0:
        return np.zeros((1, 0), dtype=int)
    ranges = [np.arange(p + 1)] * dim
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass
class ReferenceBasis:
    """Reference-cell spaces and matrices for one (dim, degree) pair.

    Attributes set up on construction:
      n_scalar  -- dim of the scalar space, (p+1)^d
      n_face    -- dim of the face trace space, (p+1)^(d-1)
      n_flux    -- d * n_scalar
      volume_rule / face_rule -- Gauss rules with p+2 points per axis
      grad_ref[a]  -- (n_scalar, n_scalar), int_ref phi_i d_a phi_j
      trace_ref[f] -- (n_face, n_scalar), int_face psi_m phi_j for face f
      face_mass_ref[f] -- (n_scalar, n_scalar), int_face phi_i phi_j
    Faces are numbered f = 2*axis + side with side 0 at coordinate 0.
    """

    dim: int
    degree: int
    n_scalar: int = field(init=False)
    n_face: int = field(init=False)
    n_flux: int = field(init=False)

    def __post_init__(self):
        d, p = self.dim, self.degree
        if d < 1:
            raise ValueError("edge dimension must be >= 1")
        if p < 0:
            raise ValueError("degree must be >= 0")
        self.n_scalar = (p + 1) ** d
        self.n_face = (p + 1) ** (d - 1)
        self.n_flux = d * self.n_scalar
        self.indices = _tensor_indices(d, p)
        self.face_indices = _tensor_indices(d - 1, p)
        self.volume_rule = gauss_rule(d, p + 2)
        self.face_rule = gauss_rule(d - 1, p + 2)
        self._build_reference_matrices()

    # -- evaluation ---------------------------------------------------------

    def eval_scalar(self, points: np.ndarray) -> np.ndarray:
        """Scalar basis values at reference points, shape (n_scalar, n_points)."""
        points = np.atleast_2d(points)
        vals1d = [legendre_values(self.degree, points[:, a]) for a in range(self.dim)]
        out = np.ones((self.n_scalar, points.shape[0]))
        for j, idx in enumerate(self.indices):
            for a in range(self.dim):
                out[j] *= vals1d[a][idx[a]]
        return out

    def eval_scalar_grad(self, points: np.ndarray) -> np.ndarray:
        """Reference gradients, shape (dim, n_scalar, n_points)."""
        points = np.atleast_2d(points)
        vals1d = [legendre_values(self.degree, points[:, a]) for a in range(self.dim)]
        ders1d = [legendre_derivatives(self.degree, points[:, a]) for a in range(self.dim)]
        out = np.ones((self.dim, self.n_scalar, points.shape[0]))
        for j, idx in enumerate(self.indices):
            for g in range(self.dim):
                for a in range(self.dim):
                    factor = ders1d[a] if a == g else vals1d[a]
                    out[g, j] *= factor[idx[a]]
        return out

    def eval_face(self, points: np.ndarray) -> np.ndarray:
        """Face/trace basis values at (d-1)-dim reference points, (n_face, n_points)."""
        points = np.atleast_2d(points) if self.dim > 1 else np.zeros((1, 0))
        if self.dim == 1:
            return np.ones((1, max(1, points.shape[0])))
        vals1d = [legendre_values(self.degree, points[:, a]) for a in range(self.dim - 1)]
        out = np.ones((self.n_face, points.shape[0]))
        for m, idx in enumerate(self.face_indices):
            for a in range(self.dim - 1):
                out[m] *= vals1d[a][idx[a]]
        return out

    # -- face geometry on the reference cell ---------------------------------

    @staticmethod
    def face_axis(face: int) -> int:
        return face // 2

    @staticmethod
    def face_side(face: int) -> int:
        return face % 2

    @staticmethod
    def face_sign(face: int) -> float:
        """Sign of the outward normal along +e_axis: -1 at side 0, +1 at side 1."""
        return -1.0 if face % 2 == 0 else 1.0

    def face_tangent_axes(self, face: int) -> list:
        a = self.face_axis(face)
        return [b for b in range(self.dim) if b != a]

    def embed_face_points(self, face: int, fpts: np.ndarray) -> np.ndarray:
        """Map (d-1)-dim face reference points into d-dim cell coordinates."""
        fpts = np.atleast_2d(fpts)
        n = fpts.shape[0] if self.dim > 1 else max(1, fpts.shape[0])
        pts = np.empty((n, self.dim))
        pts[:, self.face_axis(face)] = float(self.face_side(face))
        for j, b in enumerate(self.face_tangent_axes(face)):
            pts[:, b] = fpts[:, j]
        return pts

    # -- reference matrices ---------------------------------------------------

    def _build_reference_matrices(self):
        d = self.dim
        qp, qw = self.volume_rule.points, self.volume_rule.weights
        phi = self.eval_scalar(qp)
        dphi = self.eval_scalar_grad(qp)
        self.mass_ref = (phi * qw) @ phi.T
        self.grad_ref = [(phi * qw) @ dphi[a].T for a in range(d)]

        fqp, fqw = self.face_rule.points, self.face_rule.weights
        psi = self.eval_face(fqp)
        self.trace_ref = []
        self.face_mass_ref = []
        for f in range(2 * d):
            cellpts = self.embed_face_points(f, fqp)
            phif = self.eval_scalar(cellpts)
            self.trace_ref.append((psi * fqw) @ phif.T)
            self.face_mass_ref.append((phif * fqw) @ phif.T)


@lru_cache(maxsize=None)
def reference_basis(dim: int, degree: int) -> ReferenceBasis:
    """Cached ReferenceBasis instances (construction is pure)."""
    return ReferenceBasis(dim, degree)
