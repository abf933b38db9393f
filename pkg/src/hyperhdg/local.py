"""Per-edge local solver: saddle system, condensation, reconstruction.

For one edge with orthogonal axes of lengths L_a, diffusion kappa and penalty
tau > 0, the local problem determines (Q, U) from the trace lambda and data
(f, u_D):

    int (1/kappa) Q.p - int U div p = - int_boundary lambda p.n
    int_boundary (Q.n + tau U) v - int Q.grad v = int f v + tau int_boundary lambda v

Eliminating (Q, U) leaves the symmetric positive-semidefinite boundary
operator S mapping trace coefficients to minus the numerical-flux functionals
int_face (Q.n + tau (U - lambda)) psi_m; constant traces span its kernel for
constant kappa.

Local trace layout: face-major, face f = 2*axis + side, n_face modes per face.
Flux layout: component-major, d blocks of n_scalar.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .basis import ReferenceBasis
from .errors import DimensionMismatch, SingularGeometry, SingularLocalSystem


@dataclass
class LocalMatrices:
    """Blocks of the local saddle system for one edge geometry.

    A (flux mass), B (scalar-against-divergence), C (trace coupling on the
    right-hand side), D (boundary stabilization) follow the weak form above;
    K is the assembled saddle matrix over z = (q, u) and P extracts the
    numerical-flux functionals from z.
    """

    basis: ReferenceBasis
    lengths: np.ndarray
    kappa: float
    tau: float
    A: np.ndarray          # (n_flux, n_flux)
    B: np.ndarray          # (n_scalar, n_flux)
    C: np.ndarray          # (n_z, n_trace) trace -> rhs ("R" in the algebra)
    D: np.ndarray          # (n_scalar, n_scalar)
    K: np.ndarray          # (n_z, n_z)
    P: np.ndarray          # (n_trace, n_z)
    J: np.ndarray          # (n_trace,) diagonal tau * face measure
    f_scale: float         # cell measure: int f phi_i = f_scale * fhat_i
    lu: tuple = None

    @property
    def n_scalar(self):
        return self.basis.n_scalar

    @property
    def n_flux(self):
        return self.basis.n_flux

    @property
    def n_trace(self):
        return 2 * self.basis.dim * self.basis.n_face

    def face_measure(self, face: int) -> float:
        return float(np.prod(self.lengths)) / float(self.lengths[face // 2])


@dataclass
class CondensedOperator:
    """Steklov-Poincare style boundary operator plus data lifts for one edge.

    S is symmetric positive semidefinite on the trace space; flux functionals
    of the full local solve are  -S (lambda + l_uD) + flux_lift @ fhat,
    so lift_f = flux_lift @ fhat and lift_uD = -S @ l_uD enter the global
    right-hand side.
    """

    S: np.ndarray           # (n_trace, n_trace)
    flux_lift: np.ndarray   # (n_trace, n_scalar)
    lift_f: np.ndarray      # (n_trace,)
    lift_uD: np.ndarray     # (n_trace,)


def assemble_local(edge, basis: ReferenceBasis, tau: float) -> LocalMatrices:
    """Build all local blocks for an edge (or any object with .lengths/.kappa).

    Quadrature uses p+2 points per axis (exact for every integrand here).
    """
    if tau <= 0:
        raise SingularLocalSystem(f"LDG-H requires tau > 0, got {tau}")
    lengths = np.asarray(edge.lengths, dtype=float)
    kappa = float(edge.kappa)
    if lengths.size != basis.dim:
        raise DimensionMismatch(
            f"edge dimension {lengths.size} does not match basis dimension {basis.dim}"
        )
    if np.any(lengths <= 0):
        raise SingularGeometry(f"zero-length axis in edge lengths {lengths}")

    d, nv, nw, nf = basis.dim, basis.n_scalar, basis.n_flux, basis.n_face
    nz = nw + nv
    nt = 2 * d * nf
    vol = float(np.prod(lengths))

    A = np.zeros((nw, nw))
    B = np.zeros((nv, nw))
    K_uq = np.zeros((nv, nw))
    for a in range(d):
        sl = slice(a * nv, (a + 1) * nv)
        A[sl, sl] = (vol / kappa) * basis.mass_ref
        B[:, sl] = (vol / lengths[a]) * basis.grad_ref[a]
        K_uq[:, sl] = -(vol / lengths[a]) * basis.grad_ref[a].T

    Dmat = np.zeros((nv, nv))
    C = np.zeros((nz, nt))
    P = np.zeros((nt, nz))
    J = np.zeros(nt)
    for f in range(2 * d):
        a = f // 2
        sign = basis.face_sign(f)
        meas = vol / lengths[a]
        T = basis.trace_ref[f]                       # (nf, nv)
        Dmat += tau * meas * basis.face_mass_ref[f]
        K_uq[:, a * nv:(a + 1) * nv] += sign * meas * basis.face_mass_ref[f]
        rows = slice(f * nf, (f + 1) * nf)
        C[a * nv:(a + 1) * nv, rows] = -sign * meas * T.T
        C[nw:, rows] = tau * meas * T.T
        P[rows, a * nv:(a + 1) * nv] = sign * meas * T
        P[rows, nw:] = tau * meas * T
        J[rows] = tau * meas

    K = np.zeros((nz, nz))
    K[:nw, :nw] = A
    K[:nw, nw:] = -B.T
    K[nw:, :nw] = K_uq
    K[nw:, nw:] = Dmat

    try:
        lu = lu_factor(K)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise SingularLocalSystem(str(exc)) from exc
    if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0]))) < 1e-14 * np.max(
        np.abs(np.diag(lu[0]))
    ):
        raise SingularLocalSystem("local saddle system is numerically singular")

    return LocalMatrices(
        basis=basis,
        lengths=lengths,
        kappa=kappa,
        tau=tau,
        A=A,
        B=B,
        C=C,
        D=Dmat,
        K=K,
        P=P,
        J=J,
        f_scale=vol,
        lu=lu,
    )


def condense(local: LocalMatrices, f_coeffs=None, uD_face_coeffs=None) -> CondensedOperator:
    """Schur-eliminate the interior unknowns down to the trace space.

    f_coeffs are the edge data's coefficients in the scalar reference basis;
    uD_face_coeffs the Dirichlet data's trace coefficients (face layout,
    zero on non-Dirichlet faces).  Either may be omitted.
    """
    KinvC = lu_solve(local.lu, local.C)
    S = np.diag(local.J) - local.P @ KinvC
    Fcols = np.zeros((local.K.shape[0], local.n_scalar))
    Fcols[local.n_flux:, :] = local.f_scale * np.eye(local.n_scalar)
    flux_lift = local.P @ lu_solve(local.lu, Fcols)

    lift_f = np.zeros(local.n_trace)
    if f_coeffs is not None:
        f_coeffs = np.asarray(f_coeffs, dtype=float)
        if f_coeffs.shape != (local.n_scalar,):
            raise DimensionMismatch("f_coeffs must have length n_scalar")
        lift_f = flux_lift @ f_coeffs
    lift_uD = np.zeros(local.n_trace)
    if uD_face_coeffs is not None:
        uD_face_coeffs = np.asarray(uD_face_coeffs, dtype=float)
        if uD_face_coeffs.shape != (local.n_trace,):
            raise DimensionMismatch("uD_face_coeffs must have length n_trace")
        lift_uD = -S @ uD_face_coeffs
    return CondensedOperator(S=S, flux_lift=flux_lift, lift_f=lift_f, lift_uD=lift_uD)


def reconstruct(local: LocalMatrices, condensed, lambda_local, f_coeffs=None,
                uD_coeffs=None):
    """Recover (U, Q) coefficient vectors from the trace and the edge data.

    lambda_local is the trace in the edge's face layout (isometries already
    applied); uD_coeffs, if given, add Dirichlet data in the same layout.
    Returns (U, Q) with U of length n_scalar and Q of shape (d, n_scalar).
    """
    lam = np.asarray(lambda_local, dtype=float)
    if lam.shape != (local.n_trace,):
        raise DimensionMismatch(
            f"lambda_local must have length {local.n_trace}, got {lam.shape}"
        )
    if uD_coeffs is not None:
        uD_coeffs = np.asarray(uD_coeffs, dtype=float)
        if uD_coeffs.shape != (local.n_trace,):
            raise DimensionMismatch("uD_coeffs must have length n_trace")
        lam = lam + uD_coeffs
    rhs = local.C @ lam
    if f_coeffs is not None:
        f_coeffs = np.asarray(f_coeffs, dtype=float)
        if f_coeffs.shape != (local.n_scalar,):
            raise DimensionMismatch("f_coeffs must have length n_scalar")
        rhs[local.n_flux:] += local.f_scale * f_coeffs
    z = lu_solve(local.lu, rhs)
    Q = z[: local.n_flux].reshape(local.basis.dim, local.n_scalar)
    U = z[local.n_flux:]
    return U, Q


def flux_functionals(local: LocalMatrices, condensed: CondensedOperator,
                     lambda_local, f_coeffs=None, uD_coeffs=None) -> np.ndarray:
    """Numerical-flux functionals int_face (Q.n + tau (U - trace)) psi per face mode."""
    lam = np.asarray(lambda_local, dtype=float)
    if uD_coeffs is not None:
        lam = lam + np.asarray(uD_coeffs, dtype=float)
    out = -condensed.S @ lam
    if f_coeffs is not None:
        out = out + condensed.flux_lift @ np.asarray(f_coeffs, dtype=float)
    return out


def project_edge_field(edge, basis: ReferenceBasis, func) -> np.ndarray:
    """L2-project func(ambient points) onto the edge's scalar reference basis."""
    qp, qw = basis.volume_rule.points, basis.volume_rule.weights
    vals = np.asarray(func(edge.map_points(qp)), dtype=float)
    phi = basis.eval_scalar(qp)
    return (phi * qw) @ vals
