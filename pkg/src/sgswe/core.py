"""The stochastic Galerkin shallow water system in PCE coefficient form.

State per cell is U = (h, q) in R^{2K}: the chaos coefficients of water
height and discharge.  The system is hyperbolic while P(h) stays SPD, which
is what every operation here assumes and checks.  All operations accept
batched coefficient arrays with shape (..., K); matrices come back as
(..., n, n) stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import PceBasis, p_operator
from .errors import HyperbolicityError
from .linalg import sym_eig

__all__ = [
    "CellState",
    "Velocity",
    "Field",
    "velocity",
    "physical_flux",
    "flux_jacobian",
    "symmetrizer_eig",
    "project_bottom",
    "pad_ghosts",
]


@dataclass(frozen=True)
class CellState:
    """PCE coefficients of height and discharge; arrays of shape (..., K)."""

    h: np.ndarray = dc_field(repr=False)
    q: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        if self.h.shape != self.q.shape:
            raise ValueError(f"h/q shape mismatch: {self.h.shape} vs {self.q.shape}")


@dataclass(frozen=True)
class Velocity:
    """Velocity coefficients u plus a flag telling whether the regularized
    inverse deviated from the exact one anywhere in the batch."""

    u: np.ndarray = dc_field(repr=False)
    desingularized: np.ndarray = dc_field(repr=False)  # bool, shape (...)


@dataclass
class Field:
    """Uniform 1D grid of cell-averaged PCE coefficients.

    h, q, bottom have shape (nx, K); bottom is time-independent.
    ghost_policy selects how pad_ghosts fills the two ghost layers.
    """

    h: np.ndarray
    q: np.ndarray
    bottom: np.ndarray
    dx: float
    x_left: float
    ghost_policy: str = "outflow"

    def __post_init__(self):
        if self.h.shape != self.q.shape or self.h.shape != self.bottom.shape:
            raise ValueError("h, q, bottom must share one (nx, K) shape")
        if self.h.ndim != 2 or self.h.shape[0] < 3:
            raise ValueError("need at least 3 cells (ES2 stencils)")
        if self.ghost_policy not in ("outflow", "periodic"):
            raise ValueError(f"unknown ghost policy {self.ghost_policy!r}")

    @property
    def nx(self) -> int:
        return self.h.shape[0]

    @property
    def K(self) -> int:
        return self.h.shape[1]

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_left + self.dx * (np.arange(self.nx) + 0.5)

    @property
    def state(self) -> CellState:
        return CellState(h=self.h, q=self.q)

    def replace(self, h=None, q=None) -> "Field":
        return Field(
            h=self.h if h is None else h,
            q=self.q if q is None else q,
            bottom=self.bottom,
            dx=self.dx,
            x_left=self.x_left,
            ghost_policy=self.ghost_policy,
        )


def pad_ghosts(arr: np.ndarray, policy: str) -> np.ndarray:
    """Prepend/append two ghost layers along axis 0.

    outflow copies the nearest interior cell into both layers; periodic wraps.
    """
    if policy == "outflow":
        return np.concatenate([arr[:1], arr[:1], arr, arr[-1:], arr[-1:]], axis=0)
    if policy == "periodic":
        return np.concatenate([arr[-2:], arr, arr[:2]], axis=0)
    raise ValueError(f"unknown ghost policy {policy!r}")


def _mv(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Batched matrix-vector product for (..., n, n) @ (..., n)."""
    return np.einsum("...ij,...j->...i", A, x)


def _raise_not_hyperbolic(pi: np.ndarray):
    flat = np.min(pi, axis=-1).reshape(-1)
    idx = int(np.argmin(flat))
    raise HyperbolicityError(
        f"P(h) not positive definite (min eigenvalue {flat[idx]:.6e} at batch index {idx})",
        cell=idx,
        detail=float(flat[idx]),
    )


def velocity(basis: PceBasis, state: CellState, eps: float) -> tuple[Velocity, CellState]:
    """Velocity u from the (regularized) inverse of P(h) applied to q.

    Eigenvalues pi of P(h) below eps are replaced by
    sqrt(pi^4 + max(pi^4, eps^4)) / (sqrt(2) pi), which leaves pi >= eps
    untouched; when any eigenvalue was regularized in a batch entry, that
    entry's discharge is recomputed as q <- P(h) u so that u and q stay
    consistent.  eps = 0 gives the exact solve.
    """
    Ph = p_operator(basis, state.h)
    eig = sym_eig(Ph)
    pi, Q = eig.values, eig.vectors
    if np.any(pi <= 0.0):
        _raise_not_hyperbolic(pi)
    if eps > 0.0:
        small = pi < eps
        pi_reg = np.where(
            small,
            np.sqrt(pi**4 + np.maximum(pi**4, eps**4)) / (np.sqrt(2.0) * pi),
            pi,
        )
        activated = np.any(small, axis=-1)
    else:
        pi_reg = pi
        activated = np.zeros(pi.shape[:-1], dtype=bool)
    coeffs = np.einsum("...ji,...j->...i", Q, state.q)  # Q^T q
    u = _mv(Q, coeffs / pi_reg)
    if np.any(activated):
        q_new = np.where(activated[..., None], _mv(Ph, u), state.q)
    else:
        q_new = state.q
    return Velocity(u=u, desingularized=activated), CellState(h=state.h, q=q_new)


def physical_flux(
    basis: PceBasis,
    state: CellState,
    g: float,
    u: np.ndarray | None = None,
    eps: float = 0.0,
) -> np.ndarray:
    """Exact flux F(U) = (q; P(q) u + (g/2) P(h) h), shape (..., 2K).

    If u is not supplied it is computed through the (eps-regularized)
    velocity path, and the state's q is replaced by the recomputed one so
    flux and velocity stay mutually consistent.
    """
    if u is None:
        vel, state = velocity(basis, state, eps)
        u = vel.u
    Fq = _mv(p_operator(basis, state.q), u) + 0.5 * g * _mv(
        p_operator(basis, state.h), state.h
    )
    return np.concatenate([state.q, Fq], axis=-1)


def flux_jacobian(
    basis: PceBasis, state: CellState, g: float, eps: float = 0.0
) -> np.ndarray:
    """Flux Jacobian dF/dU in K x K blocks:

        [ O                                I                    ]
        [ g P(h) - P(q) P^{-1}(h) P(u)     P(q) P^{-1}(h) + P(u)]

    with the inverse realized through the same eigen-path as velocity().
    """
    Ph = p_operator(basis, state.h)
    eig = sym_eig(Ph)
    pi, Q = eig.values, eig.vectors
    if np.any(pi <= 0.0):
        _raise_not_hyperbolic(pi)
    if eps > 0.0:
        pi = np.where(
            pi < eps,
            np.sqrt(pi**4 + np.maximum(pi**4, eps**4)) / (np.sqrt(2.0) * pi),
            pi,
        )
    Pinv = (Q / pi[..., None, :]) @ np.swapaxes(Q, -1, -2)
    u = _mv(Pinv, state.q)
    Pq = p_operator(basis, state.q)
    Pu = p_operator(basis, u)
    PqPinv = Pq @ Pinv
    K = basis.K
    shape = state.h.shape[:-1]
    J = np.zeros(shape + (2 * K, 2 * K))
    J[..., :K, K:] = np.eye(K)
    J[..., K:, :K] = g * Ph - PqPinv @ Pu
    J[..., K:, K:] = PqPinv + Pu
    return J


def _normalize_columns(L: np.ndarray) -> np.ndarray:
    """Flip eigenvector column signs so the largest-|entry| component is > 0.

    Makes the decomposition deterministic and spatially coherent, which the
    ES2 scaled-variable ratios rely on; symmetric products T |L| T^T are
    unaffected.
    """
    idx = np.argmax(np.abs(L), axis=-2)
    lead = np.take_along_axis(L, idx[..., None, :], axis=-2)[..., 0, :]
    signs = np.where(lead < 0.0, -1.0, 1.0)
    return L * signs[..., None, :]


def symmetrizer_eig(
    basis: PceBasis, h_bar: np.ndarray, u_bar: np.ndarray, g: float
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the flux Jacobian at the intermediate state
    (h_bar, P(h_bar) u_bar), returned as (T, Lambda) with J = T Lambda T^{-1}.

    Built from the symmetrizer: G = sqrt(g P(h)), the symmetric matrix D
    assembled from G, P(u) and g G^{-1} P(q) G^{-1} is diagonalized as
    D = L Lambda L^T, and T = R L with R the scaled eigenvector matrix
    (1/sqrt(2g)) [I, I; P(u)+G, P(u)-G].  T Lambda T^T is then the
    positive semi-definite Roe-type diffusion operator.
    """
    Ph = p_operator(basis, h_bar)
    eig = sym_eig(Ph)
    pi, Q = eig.values, eig.vectors
    if np.any(pi <= 0.0):
        _raise_not_hyperbolic(pi)
    Qt = np.swapaxes(Q, -1, -2)
    sq = np.sqrt(g * pi)
    G = (Q * sq[..., None, :]) @ Qt
    Ginv = (Q / sq[..., None, :]) @ Qt

    Pu = p_operator(basis, u_bar)
    q_tilde = _mv(Ph, u_bar)
    Pq = p_operator(basis, q_tilde)
    C = g * (Ginv @ Pq @ Ginv)

    K = basis.K
    shape = h_bar.shape[:-1]
    D = np.empty(shape + (2 * K, 2 * K))
    D[..., :K, :K] = 0.5 * (2.0 * G + Pu + C)
    D[..., :K, K:] = 0.5 * (Pu - C)
    D[..., K:, :K] = 0.5 * (Pu - C)
    D[..., K:, K:] = 0.5 * (Pu + C - 2.0 * G)

    deig = sym_eig(D)
    lam = deig.values
    L = _normalize_columns(deig.vectors)

    R = np.empty_like(D)
    R[..., :K, :K] = np.eye(K)
    R[..., :K, K:] = np.eye(K)
    R[..., K:, :K] = Pu + G
    R[..., K:, K:] = Pu - G
    R /= np.sqrt(2.0 * g)
    return R @ L, lam


def project_bottom(B, basis: PceBasis, x_centers: np.ndarray) -> np.ndarray:
    """Project B(x, xi) onto the basis at each cell midpoint.

    Coefficients are (B_i)_k = sum_m w_m phi_k(xi_m) B(x_i, xi_m), shape
    (nx, K).  B must be evaluable on broadcast (x, xi) arrays or pointwise.
    """
    x_centers = np.asarray(x_centers, dtype=float)
    xi = basis.quad_nodes
    try:
        vals = np.asarray(B(x_centers[:, None], xi[None, :]), dtype=float)
        vals = np.broadcast_to(vals, (x_centers.size, xi.size))
    except Exception:
        vals = np.array([[float(B(x, s)) for s in xi] for x in x_centers])
    return vals @ (basis.quad_weights[:, None] * basis.basis_table)
