"""
Dense complex linear algebra for small matrices.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
Hermitian eigenproblems use a closed form for 2x2 inputs (vectorised over
leading batch axes) and cyclic Jacobi rotations otherwise. The SVD uses
one-sided Jacobi rotations built from the same 2x2 closed form, and the
pseudoinverse and the polar projection ``phi`` sit on top of it.

The polar projection of a matrix ``m`` is

    phi(m) = pinv(sqrt(m m^dagger)) m,

i.e. the partial isometry ``sum_i u_i v_i^dagger`` over the nonzero singular
triplets of ``m``. It is evaluated from the singular vectors rather than
from ``m m^dagger`` so that small singular values are not squared into the
rounding floor.
"""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian

TOL = 1e-10
_EPS = np.finfo(float).eps


class Status(str, enum.Enum):
    FULL = "full"
    PARTIAL = "partial"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class RankStatus:
    """Numerical rank of a matrix together with its definedness class."""

    rank: int
    status: Status

    @classmethod
    def from_rank(cls, rank: int, full_rank: int) -> "RankStatus":
        rank = int(rank)
        if rank == 0:
            status = Status.UNDEFINED
        elif rank >= full_rank:
            status = Status.FULL
        else:
            status = Status.PARTIAL
        return cls(rank, status)


@dataclass(frozen=True)
class Svd:
    """``m = u @ diag(s) @ v^dagger`` with ``s`` sorted descending."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.s.shape[-1]
        return (self.u[..., :, :k] * self.s[..., None, :]) @ dagger(self.v[..., :, :k])


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def _scale(m: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0


def is_hermitian(m, tol: float = TOL) -> bool:
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        return False
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol * _scale(m))


def is_unitary(m, tol: float = TOL) -> bool:
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        return False
    eye = np.eye(m.shape[-1])
    return bool(np.max(np.abs(dagger(m) @ m - eye), initial=0.0) <= tol)


def is_projector(m, tol: float = TOL) -> bool:
    """Orthogonal projector test: Hermitian and idempotent."""
    m = np.asarray(m)
    return is_hermitian(m, tol) and bool(np.max(np.abs(m @ m - m), initial=0.0) <= tol * _scale(m))


# -- Hermitian eigenproblem ---------------------------------------------------


def _eig2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Closed form for (..., 2, 2) Hermitian input, descending eigenvalues.
    a = m[..., 0, 0].real
    d = m[..., 1, 1].real
    b = 0.5 * (m[..., 0, 1] + np.conj(m[..., 1, 0]))
    half = 0.5 * (a - d)
    mean = 0.5 * (a + d)
    r = np.hypot(half, np.abs(b))
    lam = np.stack([mean + r, mean - r], axis=-1)

    # pick the eigenvector formula that avoids cancellation
    pos = half >= 0
    x = np.where(pos, half + r, b)
    y = np.where(pos, np.conj(b), r - half)
    x = x.astype(complex)
    y = y.astype(complex)
    norm = np.sqrt(np.abs(x) ** 2 + np.abs(y) ** 2)
    flat = norm == 0
    safe = np.where(flat, 1.0, norm)
    x = np.where(flat, 1.0, x / safe)
    y = np.where(flat, 0.0, y / safe)

    q = np.empty(m.shape[:-2] + (2, 2), dtype=complex)
    q[..., 0, 0] = x
    q[..., 1, 0] = y
    q[..., 0, 1] = -np.conj(y)
    q[..., 1, 1] = np.conj(x)
    return lam, q


def _jacobi(m: np.ndarray, max_sweeps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    a = np.array(m, dtype=complex)
    a = 0.5 * (a + dagger(a))
    n = a.shape[0]
    q = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    if norm == 0:
        return np.zeros(n), q
    for _ in range(max_sweeps):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off <= _EPS * norm:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                if abs(a[p, r]) <= 0.1 * _EPS * norm:
                    continue
                idx = [p, r]
                _, g = _eig2(a[np.ix_(idx, idx)])
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dagger(g) @ a[idx, :]
                q[:, idx] = q[:, idx] @ g
                a[p, r] = a[r, p] = 0.0
    lam = np.diag(a).real
    order = np.argsort(-lam, kind="stable")
    return lam[order], q[:, order]


def eig_hermitian(m, tol: float = TOL, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array_like, shape (..., n, n)
        Hermitian input. Leading axes are treated as a batch.
    tol : float
        Relative tolerance of the hermiticity check.
    check : bool
        Raise :class:`NotHermitian` when ``m`` fails the check.

    Returns
    -------
    eigenvalues : ndarray, shape (..., n)
        Real, sorted descending.
    eigenvectors : ndarray, shape (..., n, n)
        Unitary; column ``i`` belongs to ``eigenvalues[..., i]``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise NotHermitian(f"expected a square matrix, got shape {m.shape}")
    if check and not is_hermitian(m, tol):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    n = m.shape[-1]
    if n == 1:
        return m[..., 0, :].real.copy(), np.ones(m.shape, dtype=complex)
    if n == 2:
        return _eig2(m)
    if m.ndim == 2:
        return _jacobi(m)
    flat = m.reshape((-1, n, n))
    pairs = [_jacobi(x) for x in flat]
    lam = np.stack([p[0] for p in pairs]).reshape(m.shape[:-1])
    vec = np.stack([p[1] for p in pairs]).reshape(m.shape)
    return lam, vec


# -- SVD and friends ----------------------------------------------------------


def _complete(u: np.ndarray, i: int, cols: list[np.ndarray]) -> np.ndarray:
    # Standard basis vector with the largest residual against cols, orthonormalised.
    r = u.shape[-2]
    cand = np.broadcast_to(np.eye(r, dtype=complex), u.shape[:-2] + (r, r)).copy()
    for c in cols:
        cand = cand - c[..., :, None] * np.einsum("...k,...kj->...j", np.conj(c), cand)[..., None, :]
    norms = np.linalg.norm(cand, axis=-2)
    best = np.argmax(norms, axis=-1)
    w = np.take_along_axis(cand, best[..., None, None], axis=-1)[..., 0]
    return w / np.take_along_axis(norms, best[..., None], axis=-1)


def _one_sided_jacobi(m: np.ndarray, max_sweeps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    # Rotate column pairs of m until they are mutually orthogonal. Each
    # rotation diagonalises the 2x2 block of m^dagger m for that pair, so the
    # accumulated v diagonalises m^dagger m without ever forming it.
    b = np.array(m, dtype=complex)
    c = b.shape[-1]
    v = np.broadcast_to(np.eye(c, dtype=complex), b.shape[:-2] + (c, c)).copy()
    eye2 = np.eye(2, dtype=complex)
    # pairs below this are rounding noise relative to the whole matrix
    floor = (_EPS * np.linalg.norm(b, axis=(-2, -1))) ** 2
    for _ in range(max_sweeps):
        rotated = False
        for p in range(c - 1):
            for q in range(p + 1, c):
                bp, bq = b[..., :, p], b[..., :, q]
                app = np.sum(np.abs(bp) ** 2, axis=-1)
                aqq = np.sum(np.abs(bq) ** 2, axis=-1)
                apq = np.sum(np.conj(bp) * bq, axis=-1)
                active = np.abs(apq) > np.maximum(8 * _EPS * np.sqrt(app * aqq), floor)
                if not np.any(active):
                    continue
                rotated = True
                g = np.empty(apq.shape + (2, 2), dtype=complex)
                g[..., 0, 0], g[..., 0, 1] = app, apq
                g[..., 1, 0], g[..., 1, 1] = np.conj(apq), aqq
                _, rot = _eig2(g)
                rot = np.where(active[..., None, None], rot, eye2)
                idx = [p, q]
                b[..., :, idx] = b[..., :, idx] @ rot
                v[..., :, idx] = v[..., :, idx] @ rot
        if not rotated:
            break
    return b, v


def svd(m) -> Svd:
    """Singular value decomposition by one-sided Jacobi rotations.

    The right singular vectors are the eigenvectors of ``m^dagger m``,
    accumulated pair by pair from the closed-form 2x2 eigensolver and applied
    to the columns of ``m`` directly. The singular values are the norms
    ``|m v_i|`` and the left vectors come from Gram-Schmidt on ``m v_i``
    (completed with basis vectors where ``m v_i`` vanishes). Works on
    ``(..., r, c)`` stacks.
    """
    m = np.asarray(m, dtype=complex)
    r, c = m.shape[-2:]
    k = min(r, c)
    mv, v = _one_sided_jacobi(m)
    s_all = np.linalg.norm(mv, axis=-2)
    order = np.argsort(-s_all, axis=-1, kind="stable")
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    mv = np.take_along_axis(mv, order[..., None, :], axis=-1)

    smax = np.take_along_axis(s_all, order[..., :1], axis=-1)[..., 0]
    floor = 64 * _EPS * smax
    cols: list[np.ndarray] = []
    s = np.zeros(m.shape[:-2] + (k,))
    for i in range(r):
        if i < c:
            w = mv[..., :, i]
            for prev in cols:
                w = w - prev * np.sum(np.conj(prev) * w, axis=-1, keepdims=True)
            wn = np.linalg.norm(w, axis=-1)
            good = wn > floor
            filler = _complete(m, i, cols) if not np.all(good) else None
            safe = np.where(good, wn, 1.0)[..., None]
            col = w / safe if filler is None else np.where(good[..., None], w / safe, filler)
            if i < k:
                s[..., i] = np.where(good, wn, 0.0)
        else:
            col = _complete(m, i, cols)
        cols.append(col)
    u = np.stack(cols, axis=-1)
    return Svd(u=u, s=s, v=v)


def _rank(s: np.ndarray, tol: float, scale: float) -> np.ndarray:
    ref = np.maximum(s[..., 0], scale) if s.shape[-1] else np.zeros(s.shape[:-1])
    return np.sum(s > (tol * ref)[..., None], axis=-1)


def pseudo_inverse(m, tol: float = TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values ``<= tol * |m|_2`` count as zero."""
    f = svd(m)
    k = f.s.shape[-1]
    rank = _rank(f.s, tol, 0.0)
    keep = np.arange(k) < rank[..., None]
    inv = np.where(keep, 1.0 / np.where(keep, f.s, 1.0), 0.0)
    return (f.v[..., :, :k] * inv[..., None, :]) @ dagger(f.u[..., :, :k])


def herm_fn(m, f: Callable, tol: float = TOL) -> np.ndarray:
    """Apply a real function to a Hermitian matrix through its eigenbasis."""
    lam, q = eig_hermitian(m, tol)
    try:
        vals = np.asarray(f(lam), dtype=float)
    except TypeError:
        vals = np.vectorize(f, otypes=[float])(lam)
    return (q * vals[..., None, :]) @ dagger(q)


def phi_batch(m, tol: float = TOL, scale: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Polar projection of a stack of matrices; returns ``(isometries, ranks)``.

    A singular value counts as zero when it is ``<= tol * max(s_max, scale)``.
    ``scale=0`` gives a purely relative threshold; passing the natural size of
    the quantity (1 for blocks of a unitary) also catches matrices that vanish
    as a whole.
    """
    f = svd(m)
    k = f.s.shape[-1]
    rank = _rank(f.s, tol, scale)
    keep = (np.arange(k) < rank[..., None]).astype(float)
    iso = (f.u[..., :, :k] * keep[..., None, :]) @ dagger(f.v[..., :, :k])
    return iso, rank


def phi(m, tol: float = TOL, scale: float = 0.0) -> tuple[np.ndarray, RankStatus]:
    """``(sqrt(m m^dagger))^+ m`` together with the rank status of ``m``."""
    m = np.asarray(m, dtype=complex)
    iso, rank = phi_batch(m, tol, scale)
    return iso, RankStatus.from_rank(int(rank), min(m.shape[-2:]))


def phase_aligned_distance(a, b) -> float:
    """``min_theta |a - e^{i theta} b|_F``."""
    a = np.asarray(a)
    b = np.asarray(b)
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def sign_aligned_distance(a, b) -> float:
    """``min_{+-} |a -+ b|_F``; the relevant alignment between SU(2) elements."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))
