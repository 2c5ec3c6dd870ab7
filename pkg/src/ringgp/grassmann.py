"""
Off-diagonal geometric phases of subspace paths.

A subspace of an ``N``-dimensional space is carried by a :class:`Frame`
(``N x n`` matrix of orthonormal columns). A :class:`FramePath` samples a
path of such frames. The transported overlap

    sigma_kl = [F_k(0) | F_l(t)] W_l

combines the end-point overlap with the discrete parallel transporter
``W_l``, and the chain product

    gamma_{l1..lk} = sigma_{l1 lk} sigma_{lk lk-1} ... sigma_{l2 l1}

gives the order-k off-diagonal phase ``phi(gamma)``.

Discrete transport
------------------
``W_l`` is the latest-left product of ``phi(F(s_{j+1})^dagger F(s_j))``.
Each factor is the unitary that makes the step overlap of the transported
frames positive, so the product is norm-stable and converges (at second
order in the step) to the ordered exponential of the connection
``A_pq = <d_s l^p | l^q>``. For frames moved by a generator with no
diagonal block on the subspace every step overlap is positive already and
``W_l`` is exactly the identity.
"""

from __future__ import annotations

import json
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePath,
    DimensionMismatch,
    MissingSigma,
    NotOrthonormal,
    NotUnitary,
    RepeatedIndex,
)
from .linalg import TOL, RankStatus, dagger, is_unitary, phi, phi_batch

GRAM_REPAIR = 1e-12
GRAM_REJECT = 1e-8


def _gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    q = np.array(vectors, dtype=complex)
    for i in range(q.shape[-1]):
        for j in range(i):
            q[..., :, i] -= q[..., :, j] * np.sum(np.conj(q[..., :, j]) * q[..., :, i], axis=-1)[..., None]
        q[..., :, i] /= np.linalg.norm(q[..., :, i], axis=-1)[..., None]
    return q


def _orthonormalize(vectors: np.ndarray) -> np.ndarray:
    # vectors: (..., N, n). Repairs small Gram defects, rejects large ones.
    n = vectors.shape[-1]
    gram = dagger(vectors) @ vectors
    defect = np.max(np.abs(gram - np.eye(n)), axis=(-2, -1))
    if np.any(defect > GRAM_REJECT):
        raise NotOrthonormal(f"frame Gram defect {float(np.max(defect)):.3e} exceeds {GRAM_REJECT:g}")
    bad = defect > GRAM_REPAIR
    if np.any(bad):
        vectors = vectors.copy()
        vectors[bad] = _gram_schmidt(vectors[bad])
    return vectors


@dataclass(frozen=True)
class Frame:
    """Ordered orthonormal basis of a subspace, stored as columns."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or not 1 <= v.shape[1] <= v.shape[0]:
            raise DimensionMismatch(f"frame needs shape (N, n) with 1 <= n <= N, got {v.shape}")
        object.__setattr__(self, "vectors", _orthonormalize(v))

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    def transformed(self, u) -> "Frame":
        """Change of frame ``F -> F u`` for an ``n x n`` unitary ``u``."""
        u = np.asarray(u, dtype=complex)
        if u.shape != (self.rank, self.rank) or not is_unitary(u):
            raise NotUnitary("frame change must be a unitary of the frame's rank")
        return Frame(self.vectors @ u)

    @property
    def projector(self) -> np.ndarray:
        return self.vectors @ dagger(self.vectors)


@dataclass(frozen=True)
class Decomposition:
    """Mutually orthogonal frames that together span the ambient space."""

    frames: tuple

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            raise DimensionMismatch("decomposition needs at least one frame")
        dim = frames[0].ambient_dim
        if any(f.ambient_dim != dim for f in frames):
            raise DimensionMismatch("frames live in different ambient spaces")
        if sum(f.rank for f in frames) != dim:
            raise DimensionMismatch("subspace dimensions do not add up to the ambient dimension")
        for i, a in enumerate(frames):
            for b in frames[i + 1:]:
                if np.max(np.abs(overlap(a, b))) > GRAM_REJECT:
                    raise NotOrthonormal("frames of a decomposition must be mutually orthogonal")

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class FramePath:
    """Frames sampled at strictly increasing parameter values.

    ``vectors`` has shape ``(samples, N, n)``.
    """

    s: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).reshape(-1)
        v = np.array(self.vectors, dtype=complex)
        if v.ndim != 3 or v.shape[0] != s.shape[0]:
            raise DimensionMismatch("path needs one (N, n) frame per parameter value")
        if s.size == 0 or np.any(np.diff(s) <= 0):
            raise ValueError("path parameters must be strictly increasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "vectors", _orthonormalize(v))

    @classmethod
    def from_frames(cls, s, frames: Sequence[Frame]) -> "FramePath":
        return cls(s, np.stack([f.vectors for f in frames]))

    def __len__(self) -> int:
        return self.s.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def subspace_dim(self) -> int:
        return self.vectors.shape[2]

    def frame(self, i: int) -> Frame:
        return Frame(self.vectors[i])

    @property
    def initial_frame(self) -> Frame:
        return self.frame(0)

    @property
    def final_frame(self) -> Frame:
        return self.frame(-1)


@dataclass(frozen=True)
class SigmaMatrix:
    k: int | None
    l: int | None
    matrix: np.ndarray


@dataclass(frozen=True)
class GammaChain:
    indices: tuple
    matrix: np.ndarray


@dataclass(frozen=True)
class GpResult:
    """A geometric phase: partial isometry plus its definedness."""

    isometry: np.ndarray
    status: RankStatus = field(compare=False)


def overlap(a: Frame, b: Frame) -> np.ndarray:
    """``[a|b]_pq = <a^p | b^q>``."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("frames live in different ambient spaces")
    return dagger(a.vectors) @ b.vectors


def wz_transport(path: FramePath, tol: float = TOL) -> np.ndarray:
    """Ordered-exponential of the Wilczek-Zee connection along ``path``."""
    if len(path) < 2:
        raise DegeneratePath("transport needs at least two samples")
    f = path.vectors
    steps = dagger(f[1:]) @ f[:-1]
    iso, rank = phi_batch(steps, tol, scale=1.0)
    if np.any(rank < path.subspace_dim):
        j = int(np.argmax(rank < path.subspace_dim))
        raise DegeneratePath(f"frames {j} and {j + 1} do not overlap with full rank; refine the path")
    w = np.eye(path.subspace_dim, dtype=complex)
    for step in iso:
        w = step @ w
    return w


def sigma(k_frame: Frame, l_path: FramePath, *, k: int | None = None, l: int | None = None,
          tol: float = TOL) -> SigmaMatrix:
    final = l_path.final_frame
    if k_frame.ambient_dim != final.ambient_dim:
        raise DimensionMismatch("frames live in different ambient spaces")
    return SigmaMatrix(k, l, overlap(k_frame, final) @ wz_transport(l_path, tol))


def _matrix(x) -> np.ndarray:
    return np.asarray(x.matrix if isinstance(x, (SigmaMatrix, GammaChain)) else x, dtype=complex)


def chain_pairs(chain: Sequence[int]) -> list[tuple[int, int]]:
    """Index pairs of the sigma factors of ``gamma(chain)``, left to right."""
    chain = tuple(chain)
    if not chain:
        raise ValueError("empty index chain")
    if len(set(chain)) != len(chain):
        raise RepeatedIndex(f"chain indices must be distinct, got {chain}")
    pairs = [(chain[0], chain[-1])]
    pairs += [(chain[i], chain[i - 1]) for i in range(len(chain) - 1, 0, -1)]
    return pairs


def gamma(sigmas: Mapping, chain: Sequence[int]) -> GammaChain:
    """Cyclic product ``sigma_{l1 lk} ... sigma_{l2 l1}`` (rightmost applied first)."""
    out = None
    for pair in chain_pairs(chain):
        if pair not in sigmas:
            raise MissingSigma(pair)
        m = _matrix(sigmas[pair])
        if out is not None and out.shape[1] != m.shape[0]:
            raise DimensionMismatch(f"sigma{pair} does not compose")
        out = m if out is None else out @ m
    return GammaChain(tuple(chain), out)


def off_diagonal_gp(g, tol: float = TOL, scale: float = 1.0) -> GpResult:
    """``phi(gamma)`` with its rank status.

    ``scale=1`` suits products of transported overlaps, which are
    contractions: such a matrix is undefined once all its singular values
    drop below ``tol``.
    """
    iso, status = phi(_matrix(g), tol, scale)
    return GpResult(iso, status)


def gauge_transform(sigmas: Mapping, frame_changes: Mapping) -> dict:
    """``sigma_kl -> U_k^dagger sigma_kl U_l``; indices without a change keep the identity."""
    for idx, u in frame_changes.items():
        if not is_unitary(np.asarray(u, dtype=complex)):
            raise NotUnitary(f"frame change for subspace {idx} is not unitary")
    out = {}
    for (k, l), s in sigmas.items():
        m = _matrix(s)
        uk = np.asarray(frame_changes.get(k, np.eye(m.shape[0])), dtype=complex)
        ul = np.asarray(frame_changes.get(l, np.eye(m.shape[1])), dtype=complex)
        if uk.shape[0] != m.shape[0] or ul.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"frame change does not fit sigma{(k, l)}")
        out[(k, l)] = dagger(uk) @ m @ ul
    return out


# -- frame-path files ---------------------------------------------------------


def path_to_json(path: FramePath) -> dict:
    samples = []
    for s, v in zip(path.s, path.vectors):
        vecs = [[[float(z.real), float(z.imag)] for z in v[:, p]] for p in range(v.shape[1])]
        samples.append({"s": float(s), "vectors": vecs})
    return {"ambient_dim": path.ambient_dim, "subspace_dim": path.subspace_dim, "samples": samples}


def path_from_json(data: Mapping) -> FramePath:
    n_amb = int(data["ambient_dim"])
    n_sub = int(data["subspace_dim"])
    s = []
    frames = []
    for sample in data["samples"]:
        arr = np.array(sample["vectors"], dtype=float)
        if arr.shape != (n_sub, n_amb, 2):
            raise DimensionMismatch(f"sample at s={sample['s']} has shape {arr.shape}")
        frames.append((arr[..., 0] + 1j * arr[..., 1]).T)
        s.append(float(sample["s"]))
    return FramePath(np.array(s), np.array(frames))


def save_path(path: FramePath, filename: str | os.PathLike) -> None:
    with open(filename, "w") as fh:
        json.dump(path_to_json(path), fh)


def load_path(filename: str | os.PathLike) -> FramePath:
    with open(filename) as fh:
        return path_from_json(json.load(fh))
