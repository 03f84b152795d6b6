"""Dense Lindblad machinery for small tensor-product Hilbert spaces.

Density matrices are vectorized by column stacking, ``vec(rho)[i + d*j] =
rho[i, j]``, so that ``vec(A @ X @ B) = kron(B.T, A) @ vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

import numpy as np

from .numerics import DEFAULT_SETTINGS, NumericalSettings, active_audit


class SteadyStateError(RuntimeError):
    """Raised when a steady state is not unique or fails its hygiene checks."""


@dataclass(frozen=True)
class LindbladTerm:
    """Collapse operator ``operator`` acting at ``rate`` (angular units, 1/us)."""

    operator: np.ndarray
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"Lindblad rate must be non-negative, got {self.rate}")


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; index ``(a*dim(B) + b)`` labels ``|a>_1 (x) |b>_2``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("tensor_product expects square operators")
    return np.kron(a, b)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`; accepts a trailing batch of vectors ``(..., d*d)``."""
    x = np.asarray(x)
    d = isqrt(x.shape[-1])
    if d * d != x.shape[-1]:
        raise ValueError(f"length {x.shape[-1]} is not a square")
    return np.swapaxes(x.reshape(*x.shape[:-1], d, d), -1, -2)


def commutator_superoperator(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> -i[h, rho]``."""
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator(op: np.ndarray, rate: float = 1.0) -> np.ndarray:
    """Superoperator of ``rate * (L rho L^+ - {L^+ L, rho}/2)``."""
    eye = np.eye(op.shape[0])
    ldl = op.conj().T @ op
    return rate * (np.kron(op.conj(), op) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye))


def build_liouvillian(h: np.ndarray, terms=()) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("Hamiltonian must be square")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(h))):
        raise ValueError("Hamiltonian is not Hermitian")
    liouv = commutator_superoperator(h)
    for term in terms:
        if term.operator.shape != h.shape:
            raise ValueError(
                f"collapse operator shape {term.operator.shape} does not match Hamiltonian {h.shape}"
            )
        if term.rate:
            liouv = liouv + dissipator(np.asarray(term.operator, dtype=complex), term.rate)
    return liouv


def _trace_row(d: int) -> np.ndarray:
    return vec(np.eye(d)).astype(complex)


def steady_states(liouvillians: np.ndarray, settings: NumericalSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Steady states of a stack ``(n, d*d, d*d)`` of Liouvillians.

    The first row of each Liouvillian is replaced by the trace constraint and
    the row-equilibrated dense system is solved directly. Every returned
    state has passed the hygiene checks in ``settings``.
    """
    liouv = np.asarray(liouvillians, dtype=complex)
    if liouv.ndim == 2:
        liouv = liouv[None]
    n, dim, dim2 = liouv.shape
    d = isqrt(dim)
    if dim != dim2 or d * d != dim:
        raise ValueError(f"superoperator shape {liouv.shape[1:]} is not (d^2, d^2)")
    system = liouv.copy()
    system[:, 0, :] = _trace_row(d)
    # row equilibration keeps huge interaction shifts from masquerading as singularity
    row_max = np.max(np.abs(system), axis=2)
    row_scale = 1.0 / np.where(row_max > 0, row_max, 1.0)
    system *= row_scale[:, :, None]
    if not np.all(np.isfinite(system)):
        raise SteadyStateError("Liouvillian has non-finite entries")
    cond = np.linalg.cond(system)
    bad = ~np.isfinite(cond) | (cond > settings.max_condition)
    if np.any(bad):
        raise SteadyStateError(
            f"steady state not unique: condition number {np.max(cond):.3g} exceeds "
            f"{settings.max_condition:.3g}"
        )
    rhs = np.zeros((n, dim, 1), dtype=complex)
    rhs[:, 0, 0] = row_scale[:, 0]
    x = np.linalg.solve(system, rhs)[..., 0]
    residual = np.max(np.abs(np.einsum("nij,nj->ni", liouv, x)), axis=1)
    rhos = unvec(x)
    check_states(rhos, residual, settings)
    return rhos


def steady_state(liouvillian: np.ndarray, settings: NumericalSettings = DEFAULT_SETTINGS) -> np.ndarray:
    return steady_states(np.asarray(liouvillian)[None], settings)[0]


def _min_eig_3x3(h: np.ndarray) -> np.ndarray:
    """Closed-form smallest eigenvalue of Hermitian 3x3 matrices (absolute error ~1e-8 * scale)."""
    q = np.trace(h, axis1=-2, axis2=-1).real / 3.0
    p1 = np.abs(h[..., 0, 1]) ** 2 + np.abs(h[..., 0, 2]) ** 2 + np.abs(h[..., 1, 2]) ** 2
    diag = np.diagonal(h, axis1=-2, axis2=-1).real - q[..., None]
    p = np.sqrt((np.sum(diag**2, axis=-1) + 2.0 * p1) / 6.0)
    safe = np.where(p > 0, p, 1.0)
    b = (h - q[..., None, None] * np.eye(3)) / safe[..., None, None]
    r = np.clip(np.linalg.det(b).real / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    return q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)


def min_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of each Hermitian matrix in a batch.

    For 3x3 batches a closed form is used and only states within 1e-6 of
    zero are refined with a full eigensolver.
    """
    if h.shape[-1] != 3 or h.ndim < 3:
        return np.min(np.linalg.eigvalsh(h), axis=-1)
    out = _min_eig_3x3(h)
    near = out < 1e-6
    if np.any(near):
        out[near] = np.linalg.eigvalsh(h[near])[:, 0]
    return out


def check_states(rhos: np.ndarray, residuals: np.ndarray, settings: NumericalSettings = DEFAULT_SETTINGS):
    """Assert trace, Hermiticity, positivity and residual bounds on a batch of states."""
    rhos = np.asarray(rhos)
    trace_err = np.abs(np.trace(rhos, axis1=-2, axis2=-1) - 1.0)
    herm_err = np.max(np.abs(rhos - np.conj(np.swapaxes(rhos, -1, -2))), axis=(-2, -1))
    min_eig = min_eigenvalues(0.5 * (rhos + np.conj(np.swapaxes(rhos, -1, -2))))
    residuals = np.asarray(residuals)
    audit = active_audit()
    if audit is not None:
        audit.record(
            rhos.shape[0], np.max(trace_err), np.max(herm_err), np.min(min_eig), np.max(residuals)
        )
    problems = []
    if np.max(trace_err) > settings.trace_tol:
        problems.append(f"trace error {np.max(trace_err):.3g}")
    if np.max(herm_err) > settings.hermiticity_tol:
        problems.append(f"hermiticity error {np.max(herm_err):.3g}")
    if np.min(min_eig) < settings.eigenvalue_floor:
        problems.append(f"minimum eigenvalue {np.min(min_eig):.3g}")
    if np.max(residuals) > settings.residual_tol:
        problems.append(f"residual {np.max(residuals):.3g}")
    if problems:
        raise SteadyStateError("steady state failed hygiene checks: " + ", ".join(problems))


def partial_trace(rho: np.ndarray, keep: int, dims=(3, 3)) -> np.ndarray:
    """Reduced density matrix of subsystem ``keep`` (0 or 1) of a bipartite state."""
    d1, d2 = dims
    rho = np.asarray(rho)
    if rho.shape[-2:] != (d1 * d2, d1 * d2):
        raise ValueError(f"state of shape {rho.shape[-2:]} does not match dims {dims}")
    r = rho.reshape(*rho.shape[:-2], d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("...ajbj->...ab", r)
    if keep == 1:
        return np.einsum("...iaib->...ab", r)
    raise ValueError(f"keep must be 0 or 1, got {keep}")
