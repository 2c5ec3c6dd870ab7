"""
Four-qubit cyclic XY + Dzyaloshinskii-Moriya ring.

Qubit ``k`` couples to ``k+1`` (cyclically, so bond 4 joins qubits 4 and 1)
through

    J (X X + Y Y) / 2  +  D (X Y - Y X) / 2.

The single-excitation sector is ordered ``|1000>, |0010>, |0100>, |0001>``;
the first two states span H_1 and the last two H_2. There the Hamiltonian
is ``[[0, T], [T^dagger, 0]]`` and a pulse of area ``a`` evolves by

    [[U cos(aS) U^+,  -i U sin(aS) V^+],
     [-i V sin(aS) U^+,  V cos(aS) V^+]]      with  T = U S V^+.

The four 2x2 blocks are the transported overlaps ``sigma_kl`` of the two
subspace paths, from which the order-1 and order-2 off-diagonal phases of
the ring follow.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceFailure, FirstPulseNotOffDiagonal, SingularT
from .grassmann import Frame, FramePath, GpResult
from .linalg import (
    TOL,
    RankStatus,
    Status,
    Svd,
    dagger,
    eig_hermitian,
    is_unitary,
    phi,
    sign_aligned_distance,
    svd,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
Z = PAULI_Z

BOND_KEYS = ("12", "23", "34", "41")
# single-excitation basis |1000>, |0010>, |0100>, |0001> as 16-dim indices (qubit 1 most significant)
SECTOR_INDICES = (0b1000, 0b0010, 0b0100, 0b0001)


@dataclass(frozen=True)
class RingCouplings:
    """XY strengths ``j`` and DM strengths ``dz`` on bonds 12, 23, 34, 41."""

    j: tuple = (0.0, 0.0, 0.0, 0.0)
    dz: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        j = tuple(float(x) for x in self.j)
        dz = tuple(float(x) for x in self.dz)
        if len(j) != 4 or len(dz) != 4:
            raise ValueError("a ring has four bonds")
        if not all(map(math.isfinite, j + dz)):
            raise ValueError("couplings must be finite")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "dz", dz)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "RingCouplings":
        return cls(tuple(data.get(f"j{b}", 0.0) for b in BOND_KEYS),
                   tuple(data.get(f"d{b}", 0.0) for b in BOND_KEYS))

    def to_mapping(self) -> dict:
        out = {f"j{b}": v for b, v in zip(BOND_KEYS, self.j)}
        out.update({f"d{b}": v for b, v in zip(BOND_KEYS, self.dz)})
        return out

    @classmethod
    def from_t(cls, t) -> "RingCouplings":
        """Couplings whose coupling matrix equals ``t``."""
        t = np.asarray(t, dtype=complex)
        j = (t[0, 0].real, t[1, 0].real, t[1, 1].real, t[0, 1].real)
        dz = (-t[0, 0].imag, t[1, 0].imag, -t[1, 1].imag, t[0, 1].imag)
        return cls(j, dz)

    @classmethod
    def uniform(cls, lam: float) -> "RingCouplings":
        """Couplings with ``T = lam * I``."""
        return cls((lam, 0.0, lam, 0.0), (0.0,) * 4)


@dataclass(frozen=True)
class PulseSpec:
    couplings: RingCouplings
    area: float

    @classmethod
    def from_mapping(cls, data: Mapping) -> "PulseSpec":
        return cls(RingCouplings.from_mapping(data), float(data.get("area", 0.0)))

    def to_mapping(self) -> dict:
        return {**self.couplings.to_mapping(), "area": self.area}


@dataclass(frozen=True)
class TMatrix:
    matrix: np.ndarray
    svd: Svd

    @property
    def singular_values(self) -> np.ndarray:
        return self.svd.s


@dataclass(frozen=True)
class EvolutionOperator:
    """Unitary on the single-excitation sector with 2x2 blocks ``sigma_kl``."""

    matrix: np.ndarray

    def block(self, k: int, l: int) -> np.ndarray:
        return self.matrix[2 * (k - 1):2 * k, 2 * (l - 1):2 * l]

    @property
    def sigma11(self):
        return self.block(1, 1)

    @property
    def sigma12(self):
        return self.block(1, 2)

    @property
    def sigma21(self):
        return self.block(2, 1)

    @property
    def sigma22(self):
        return self.block(2, 2)

    def sigmas(self) -> dict:
        return {(k, l): self.block(k, l) for k in (1, 2) for l in (1, 2)}

    def __matmul__(self, other: "EvolutionOperator") -> "EvolutionOperator":
        return EvolutionOperator(self.matrix @ other.matrix)


@dataclass(frozen=True)
class SectorLabel:
    """Order-1 phase written as ``(-1)^c Q Z^d Q^dagger``."""

    c: int
    d: int
    conjugating_unitary: np.ndarray

    def matrix(self) -> np.ndarray:
        core = np.diag([1.0, -1.0 if self.d else 1.0]).astype(complex)
        q = self.conjugating_unitary
        return (-1) ** self.c * q @ core @ dagger(q)


# -- Hamiltonians ---------------------------------------------------------------


def _site_op(op: np.ndarray, site: int, n: int = 4) -> np.ndarray:
    mats = [np.eye(2, dtype=complex)] * n
    mats[site] = op
    return reduce(np.kron, mats)


def xy_term(a: int, b: int, n: int = 4) -> np.ndarray:
    """``(X_a X_b + Y_a Y_b) / 2`` for zero-based sites."""
    return 0.5 * (_site_op(PAULI_X, a, n) @ _site_op(PAULI_X, b, n)
                  + _site_op(PAULI_Y, a, n) @ _site_op(PAULI_Y, b, n))


def dm_term(a: int, b: int, n: int = 4) -> np.ndarray:
    """``(X_a Y_b - Y_a X_b) / 2`` for zero-based sites."""
    return 0.5 * (_site_op(PAULI_X, a, n) @ _site_op(PAULI_Y, b, n)
                  - _site_op(PAULI_Y, a, n) @ _site_op(PAULI_X, b, n))


def full_hamiltonian(couplings: RingCouplings) -> np.ndarray:
    """16x16 ring Hamiltonian without the pulse envelope."""
    h = np.zeros((16, 16), dtype=complex)
    for k in range(4):
        a, b = k, (k + 1) % 4
        h += couplings.j[k] * xy_term(a, b) + couplings.dz[k] * dm_term(a, b)
    return h


def restrict_to_sector(op: np.ndarray) -> np.ndarray:
    idx = list(SECTOR_INDICES)
    return np.asarray(op)[np.ix_(idx, idx)]


def t_matrix(couplings: RingCouplings, strict: bool = False, tol: float = TOL) -> TMatrix:
    """Coupling matrix ``T`` and its SVD.

    With ``strict=True`` a singular value ``<= tol * s_max`` (or an all-zero
    ``T``) raises :class:`SingularT`.
    """
    j, dz = couplings.j, couplings.dz
    t = np.array([[j[0] - 1j * dz[0], j[3] + 1j * dz[3]],
                  [j[1] + 1j * dz[1], j[2] - 1j * dz[2]]], dtype=complex)
    f = svd(t)
    if strict and (f.s[0] == 0 or f.s[-1] <= tol * f.s[0]):
        raise SingularT(f"T has singular values {f.s.tolist()}; a positive S is required")
    return TMatrix(t, f)


def effective_hamiltonian(couplings: RingCouplings) -> np.ndarray:
    t = t_matrix(couplings).matrix
    h = np.zeros((4, 4), dtype=complex)
    h[:2, 2:] = t
    h[2:, :2] = dagger(t)
    return h


# -- evolution ------------------------------------------------------------------


def _blocks(tm: TMatrix, areas):
    u, s, v = tm.svd.u, tm.svd.s, tm.svd.v
    x = np.multiply.outer(np.asarray(areas, dtype=float), s)
    c, sn = np.cos(x), np.sin(x)
    out = np.empty(x.shape[:-1] + (4, 4), dtype=complex)
    out[..., :2, :2] = (u * c[..., None, :]) @ dagger(u)
    out[..., :2, 2:] = -1j * (u * sn[..., None, :]) @ dagger(v)
    out[..., 2:, :2] = -1j * (v * sn[..., None, :]) @ dagger(u)
    out[..., 2:, 2:] = (v * c[..., None, :]) @ dagger(v)
    return out


def evolve(pulse: PulseSpec, strict: bool = False, tol: float = TOL) -> EvolutionOperator:
    """Closed-form evolution operator of a single pulse."""
    tm = t_matrix(pulse.couplings, strict=strict, tol=tol)
    return EvolutionOperator(_blocks(tm, pulse.area))


def evolve_batch(couplings: RingCouplings, areas, strict: bool = False, tol: float = TOL) -> np.ndarray:
    """Stack of evolution matrices for many pulse areas, shape ``(len(areas), 4, 4)``."""
    return _blocks(t_matrix(couplings, strict=strict, tol=tol), areas)


def initial_frame(l: int) -> Frame:
    return Frame(np.eye(4, dtype=complex)[:, 2 * (l - 1):2 * l])


def subspace_path(couplings: RingCouplings, l: int, area: float, samples: int) -> FramePath:
    """Frames of H_l carried along by the pulse, sampled at partial areas in ``[0, area]``."""
    partial = np.linspace(0.0, area, samples)
    ops = evolve_batch(couplings, partial)
    return FramePath(partial, ops[:, :, 2 * (l - 1):2 * l])


# -- order-1 and order-2 phases ---------------------------------------------------


def _gp(m, tol) -> GpResult:
    iso, status = phi(m, tol, scale=1.0)
    return GpResult(iso, status)


def sector_label(cos_values: Sequence[float], q: np.ndarray) -> SectorLabel:
    """Label from the cosine eigenvalues, ordered by descending singular value.

    ``c`` is set when the cosine of the larger singular value is negative and
    ``d`` when the two cosines differ in sign.
    """
    neg = [bool(x < 0) for x in cos_values]
    return SectorLabel(int(neg[0]), int(neg[0] != neg[1]), q)


def gp_kappa1(pulse: PulseSpec, strict: bool = True, tol: float = TOL):
    """Order-1 phases of both subspaces.

    Returns ``(gp1, gp2, label1, label2)``; a label is ``None`` unless the
    corresponding phase is fully defined.
    """
    tm = t_matrix(pulse.couplings, strict=strict, tol=tol)
    op = EvolutionOperator(_blocks(tm, pulse.area))
    g1, g2 = _gp(op.sigma11, tol), _gp(op.sigma22, tol)
    cosines = np.cos(pulse.area * tm.svd.s)
    lab1 = sector_label(cosines, tm.svd.u) if g1.status.status is Status.FULL else None
    lab2 = sector_label(cosines, tm.svd.v) if g2.status.status is Status.FULL else None
    return g1, g2, lab1, lab2


def gp_kappa2_from(op: EvolutionOperator, tol: float = TOL) -> tuple[GpResult, GpResult]:
    """``phi(sigma12 sigma21)`` and ``phi(sigma21 sigma12)`` of any sector evolution."""
    return _gp(op.sigma12 @ op.sigma21, tol), _gp(op.sigma21 @ op.sigma12, tol)


def gp_kappa2_single(pulse: PulseSpec, strict: bool = True, tol: float = TOL):
    return gp_kappa2_from(evolve(pulse, strict=strict, tol=tol), tol)


# -- two-pulse sequences ----------------------------------------------------------


def compose_pulses(first: PulseSpec, second: PulseSpec, tol: float = 1e-9,
                   strict: bool = False) -> EvolutionOperator:
    """Evolution of ``first`` followed by ``second``.

    The first pulse must exchange H_1 and H_2 completely (vanishing diagonal
    blocks); only then do the blocks of the product take the form
    ``[[s12 s~21, s11 s~12], [s22 s~21, s21 s~12]]``.
    """
    u1 = evolve(first, strict=strict)
    off = max(np.max(np.abs(u1.sigma11)), np.max(np.abs(u1.sigma22)))
    if off > tol:
        raise FirstPulseNotOffDiagonal(
            f"first pulse leaves a diagonal block of size {off:.3e}; need cos(a S) = 0")
    return evolve(second, strict=strict) @ u1


def gp_kappa2_composed(first: PulseSpec, second: PulseSpec, tol: float = TOL):
    return gp_kappa2_from(compose_pulses(first, second), tol)


def two_pulse_closed_form(second: PulseSpec, tol: float = TOL) -> tuple[np.ndarray, np.ndarray]:
    """``-phi(s11 s22)`` and ``-phi(s22 s11)`` of the second pulse.

    Valid when the first pulse has ``T = lam I`` and area ``(2m-1) pi / (2 lam)``.
    """
    op = evolve(second)
    a, _ = phi(op.sigma11 @ op.sigma22, tol, scale=1.0)
    b, _ = phi(op.sigma22 @ op.sigma11, tol, scale=1.0)
    return -a, -b


def swap_pulse(lam: float = 1.0, m: int = 1) -> PulseSpec:
    """First pulse with ``T = lam I`` and area ``(2m-1) pi / (2 lam)``."""
    return PulseSpec(RingCouplings.uniform(lam), (2 * m - 1) * math.pi / (2 * lam))


def _su2_axis(g: np.ndarray) -> tuple[float, np.ndarray]:
    # g = cos(beta) I + i sin(beta) m.sigma; returns beta in [0, pi] and unit m
    a, b = g[0, 0], g[0, 1]
    vec = np.array([b.imag, b.real, a.imag])
    nv = np.linalg.norm(vec)
    beta = math.atan2(nv, a.real)
    axis = vec / nv if nv > 1e-15 else np.array([0.0, 0.0, 1.0])
    return beta, axis


def _plus_eigvec(n: np.ndarray) -> np.ndarray:
    _, q = eig_hermitian(n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z)
    return q[:, 0]


def _reflection_unitary(n: np.ndarray) -> np.ndarray:
    # unitary Q with Q Z Q^dagger = n.sigma
    u1 = _plus_eigvec(n)
    u2 = np.array([-np.conj(u1[1]), np.conj(u1[0])])
    return np.column_stack([u1, u2])


def analytic_second_pulse(target) -> PulseSpec:
    """Second pulse whose order-2 phase after :func:`swap_pulse` is ``target``.

    Writes ``-target`` as a product of two reflections ``(n1.sigma)(n2.sigma)``
    and picks ``T = U S V^dagger`` with ``U Z U^+ = n1.sigma``,
    ``V Z V^+ = n2.sigma`` and ``cos(S) = diag(-1/2, 1/2)`` at unit area.
    """
    beta, axis = _su2_axis(-np.asarray(target, dtype=complex))
    e1 = np.cross(axis, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 0.5:
        e1 = np.cross(axis, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    n1 = e1
    n2 = math.cos(beta) * e1 + math.sin(beta) * e2
    u = _reflection_unitary(n1)
    v = _reflection_unitary(n2)
    s = np.diag([2 * math.pi / 3, math.pi / 3])
    return PulseSpec(RingCouplings.from_t(u @ s @ dagger(v)), 1.0)


def _params_to_pulse(x) -> PulseSpec:
    return PulseSpec(RingCouplings(x[0:4], x[4:8]), x[8])


def _pulse_to_params(p: PulseSpec) -> np.ndarray:
    return np.array(p.couplings.j + p.couplings.dz + (p.area,))


def refine_second_pulse(target, seed: PulseSpec, first: PulseSpec, tol: float,
                        max_evals: int = 20000) -> tuple[PulseSpec, float]:
    """Nelder-Mead polish of a second pulse over (J, D, area)."""
    target = np.asarray(target, dtype=complex)

    def cost(x):
        try:
            g12, _ = gp_kappa2_composed(first, _params_to_pulse(x))
        except (FirstPulseNotOffDiagonal, SingularT):
            return 1e3
        if g12.status.status is not Status.FULL:
            return 1e2
        return sign_aligned_distance(g12.isometry, target)

    res = minimize(cost, _pulse_to_params(seed), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 0.1 * tol, "maxfev": max_evals, "adaptive": True})
    return _params_to_pulse(res.x), float(res.fun)


def su2_target(target, tol: float = 1e-6, lam: float = 1.0) -> tuple[PulseSpec, PulseSpec]:
    """Two-pulse sequence whose order-2 phase ``U_g(C1, C2)`` equals ``target``.

    Raises :class:`ConvergenceFailure` (carrying the best pair) if the
    analytic construction plus refinement does not reach ``tol``.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or not is_unitary(target, 1e-8) or abs(np.linalg.det(target) - 1) > 1e-8:
        raise ValueError("target must be a 2x2 special unitary")
    first = swap_pulse(lam)
    if np.allclose(target, -np.eye(2), atol=tol / 4):
        return first, PulseSpec(RingCouplings.uniform(lam), 0.0)
    second = analytic_second_pulse(target)
    g12, _ = gp_kappa2_composed(first, second)
    dist = sign_aligned_distance(g12.isometry, target)
    if dist > tol:
        second, dist = refine_second_pulse(target, second, first, tol)
    if dist > tol:
        raise ConvergenceFailure(f"best distance {dist:.3e} above {tol:g}", best=(first, second, dist))
    return first, second


# -- area sweeps ------------------------------------------------------------------


def classify_areas(couplings: RingCouplings, areas, tol: float = TOL, strict: bool = True) -> dict:
    """Vectorised ranks and eigen-data of all phases over a set of pulse areas.

    Returns arrays keyed ``k1_rank`` (n, 2), ``k2_rank`` (n, 2),
    ``cos`` (n, 2) and ``sin`` (n, 2). ``cos``/``sin`` are the eigenvalues of
    ``sigma11`` and ``i sigma12`` in the singular frame of ``T``.
    """
    tm = t_matrix(couplings, strict=strict, tol=tol)
    ops = _blocks(tm, np.asarray(areas, dtype=float))
    u, v = tm.svd.u, tm.svd.v
    cos = np.einsum("ij,njk,ki->ni", dagger(u), ops[:, :2, :2], u).real
    sin = np.einsum("ij,njk,ki->ni", dagger(u), 1j * ops[:, :2, 2:], v).real
    # sigma11, sigma22 have singular values |cos|; the loop products sin^2,
    # all at most 1, so the phi threshold tol * max(s_max, 1) is just tol
    r1 = np.sum(np.abs(cos) > tol, axis=-1)
    r2 = np.sum(sin**2 > tol, axis=-1)
    return {
        "k1_rank": np.stack([r1, r1], axis=-1),
        "k2_rank": np.stack([r2, r2], axis=-1),
        "cos": cos,
        "sin": sin,
    }


def _status(rank: int) -> Status:
    return RankStatus.from_rank(rank, 2).status


@dataclass(frozen=True)
class SweepRow:
    area: float
    cos_signs: tuple
    c: int | None
    d: int | None
    k1_status: tuple
    k2_status: tuple
    k1_boundary: bool = False
    k2_singular: bool = False
    refined: bool = False
    c_flip: bool = False
    d_flip: bool = False

    @property
    def flags(self) -> str:
        names = ("k1_boundary", "k2_singular", "refined", "c_flip", "d_flip")
        return ";".join(n for n in names if getattr(self, n))


def _bisect(fn, lo: float, hi: float, width: float) -> float:
    flo = fn(lo)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _crossings(values: np.ndarray, grid: np.ndarray, tol: float, fn, width: float) -> list[float]:
    # zero crossings of one eigenvalue track, bracketed between non-negligible samples
    out = []
    sig = np.where(np.abs(values) <= tol, 0, np.sign(values))
    nz = np.flatnonzero(sig)
    for a, b in zip(nz[:-1], nz[1:]):
        if sig[a] != sig[b]:
            out.append(_bisect(fn, grid[a], grid[b], width))
    return out


def _row(couplings, area, tol, refined=False, c_flip=False, d_flip=False) -> SweepRow:
    info = classify_areas(couplings, [area], tol)
    k1 = tuple(_status(r) for r in info["k1_rank"][0])
    k2 = tuple(_status(r) for r in info["k2_rank"][0])
    cos = info["cos"][0]
    signs = tuple(int(x) for x in np.where(np.abs(cos) <= tol, 0, np.sign(cos)))
    full = all(k is Status.FULL for k in k1)
    lab = sector_label(cos, np.eye(2)) if full else None
    return SweepRow(
        area=float(area),
        cos_signs=signs,
        c=lab.c if lab else None,
        d=lab.d if lab else None,
        k1_status=k1,
        k2_status=k2,
        k1_boundary=not full,
        k2_singular=not all(k is Status.FULL for k in k2),
        refined=refined,
        c_flip=c_flip,
        d_flip=d_flip,
    )


def sweep_area(couplings: RingCouplings, grid, tol: float = TOL, width: float = 1e-10) -> list[SweepRow]:
    """Classify every grid area and insert bisection-refined singular points.

    Zeros of the cosine eigenvalues (order-1 sector boundaries) and of the
    sine eigenvalues (order-2 singular points) found between grid samples
    are located to ``width`` and appear as extra rows flagged ``refined``.
    Crossings of both cosines at the same area are merged into one boundary
    with ``c_flip``; a single crossing carries ``d_flip``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("area grid must be non-empty and strictly increasing")
    info = classify_areas(couplings, grid, tol)

    def track(key, i):
        return lambda a: classify_areas(couplings, [a], tol)[key][0, i]

    cos_zeros = [z for i in range(2) for z in _crossings(info["cos"][:, i], grid, tol, track("cos", i), width)]
    sin_zeros = [z for i in range(2) for z in _crossings(info["sin"][:, i], grid, tol, track("sin", i), width)]

    merge = 10 * width
    events: list[list] = []  # [area, n_cos_crossings, is_sin]
    for z in sorted(cos_zeros):
        if events and events[-1][1] and abs(events[-1][0] - z) <= merge:
            events[-1][0] = 0.5 * (events[-1][0] + z)
            events[-1][1] += 1
        else:
            events.append([z, 1, False])
    for z in sorted(sin_zeros):
        hit = next((e for e in events if abs(e[0] - z) <= merge and not e[1]), None)
        if hit is None:
            events.append([z, 0, True])

    rows = []
    for i, a in enumerate(grid):
        k1 = tuple(_status(r) for r in info["k1_rank"][i])
        k2 = tuple(_status(r) for r in info["k2_rank"][i])
        cos = info["cos"][i]
        full = all(k is Status.FULL for k in k1)
        lab = sector_label(cos, np.eye(2)) if full else None
        rows.append(SweepRow(
            area=float(a),
            cos_signs=tuple(int(x) for x in np.where(np.abs(cos) <= tol, 0, np.sign(cos))),
            c=lab.c if lab else None,
            d=lab.d if lab else None,
            k1_status=k1,
            k2_status=k2,
            k1_boundary=not full,
            k2_singular=not all(k is Status.FULL for k in k2),
        ))
    for a, ncos, _ in events:
        rows.append(_row(couplings, a, tol, refined=True,
                         c_flip=ncos == 2, d_flip=ncos == 1))
    rows.sort(key=lambda r: (r.area, r.refined))
    return rows


def boundaries(rows: Sequence[SweepRow], merge: float = 1e-8) -> dict:
    """Order-1 boundaries and order-2 singular areas of a sweep.

    Refined rows come first; grid rows flagged singular are added when no
    refined point lies within ``merge`` (zeros on the grid ends cannot be
    bracketed).
    """
    def collect(refined, flagged):
        out = [r.area for r in rows if r.refined and refined(r)]
        for r in rows:
            if not r.refined and flagged(r) and all(abs(r.area - a) > merge for a in out):
                out.append(r.area)
        return sorted(out)

    return {
        "kappa1": collect(lambda r: r.c_flip or r.d_flip, lambda r: r.k1_boundary),
        "kappa2": collect(lambda r: r.k2_singular, lambda r: r.k2_singular),
    }
