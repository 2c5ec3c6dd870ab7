"""Quick invariant suites behind ``ringgp selftest``."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.stats import unitary_group

from . import grassmann as gm
from .interferometer import ancilla_formula, loop_gamma, run_ancilla, w_from_params, WGenParams
from .linalg import dagger, herm_fn, phi, pseudo_inverse, svd
from .ring import (
    PulseSpec,
    RingCouplings,
    classify_areas,
    effective_hamiltonian,
    evolve,
    gp_kappa2_single,
    initial_frame,
    subspace_path,
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tol: float

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name:<28} worst={self.worst:.3e} tol={self.tol:.1e}"


def _cmat(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _couplings(rng):
    return RingCouplings(rng.normal(size=4), rng.normal(size=4))


def svd_reconstruction(rng):
    return max(np.linalg.norm(svd(m).reconstruct() - m)
               for m in (_cmat(rng, n, n) for n in (2, 3, 4) for _ in range(10)))


def phi_on_unitaries(rng):
    return max(np.max(np.abs(phi(u)[0] - u)) for u in unitary_group.rvs(2, size=20, random_state=rng))


def moore_penrose(rng):
    worst = 0.0
    for _ in range(20):
        a = _cmat(rng, 3, 2)
        m = a @ dagger(a)
        p = pseudo_inverse(m)
        worst = max(worst,
                    np.max(np.abs(m @ p @ m - m)),
                    np.max(np.abs(p @ m @ p - p)),
                    np.max(np.abs(m @ p - dagger(m @ p))),
                    np.max(np.abs(p @ m - dagger(p @ m))))
    return worst


def trig_identity(rng):
    worst = 0.0
    for _ in range(20):
        h = _cmat(rng, 3, 3)
        h = h + dagger(h)
        c, s = herm_fn(h, np.cos), herm_fn(h, np.sin)
        worst = max(worst, np.max(np.abs(c @ c + s @ s - np.eye(3))))
    return worst


def evolve_vs_expm(rng):
    worst = 0.0
    for _ in range(50):
        c = _couplings(rng)
        a = rng.uniform(0, 4 * math.pi)
        worst = max(worst, np.linalg.norm(evolve(PulseSpec(c, a)).matrix
                                          - expm(-1j * a * effective_hamiltonian(c))))
    return worst


def kappa2_single(rng):
    worst = 0.0
    for _ in range(50):
        g12, g21 = gp_kappa2_single(PulseSpec(_couplings(rng), rng.uniform(0.1, 3.0)))
        worst = max(worst, np.linalg.norm(g12.isometry + np.eye(2)), np.linalg.norm(g21.isometry + np.eye(2)))
    return worst


def transport_blocks(rng):
    c = _couplings(rng)
    a = rng.uniform(0.5, 2.0)
    op = evolve(PulseSpec(c, a))
    worst = 0.0
    for l in (1, 2):
        path = subspace_path(c, l, a, 1000)
        for k in (1, 2):
            s = gm.sigma(initial_frame(k), path).matrix
            worst = max(worst, np.max(np.abs(s - op.block(k, l))))
    return worst


def gauge_covariance(rng):
    worst = 0.0
    for _ in range(20):
        op = evolve(PulseSpec(_couplings(rng), rng.uniform(0.1, 3.0)))
        sig = op.sigmas()
        us = {1: unitary_group.rvs(2, random_state=rng), 2: unitary_group.rvs(2, random_state=rng)}
        new = gm.gauge_transform(sig, us)
        for chain in ((1,), (2,), (1, 2), (2, 1)):
            before = gm.off_diagonal_gp(gm.gamma(sig, chain)).isometry
            after = gm.off_diagonal_gp(gm.gamma(new, chain)).isometry
            u = us[chain[0]]
            worst = max(worst, np.max(np.abs(after - dagger(u) @ before @ u)))
    return worst


def interferometer_formula(rng):
    worst = 0.0
    for _ in range(30):
        op = evolve(PulseSpec(_couplings(rng), rng.uniform(0, 4 * math.pi)))
        w = w_from_params(WGenParams(*rng.normal(size=5), b_area=rng.uniform(0, 3)))
        l = int(rng.integers(1, 3))
        psi = np.zeros(4, dtype=complex)
        psi[2 * (l - 1):2 * l] = _cmat(rng, 2)
        psi /= np.linalg.norm(psi)
        worst = max(worst, abs(run_ancilla(psi, l, op, w) - ancilla_formula(psi, loop_gamma(op, l), w)))
    return worst


def mutual_exclusivity(rng):
    # 1.0 for every area where both orders are undefined at once, else 0
    bad = 0
    for _ in range(5):
        info = classify_areas(_couplings(rng), np.linspace(0, 4 * math.pi, 20001))
        bad += int(np.sum(np.all(info["k1_rank"] == 0, axis=1) & np.all(info["k2_rank"] == 0, axis=1)))
    return float(bad)


SUITES: dict[str, tuple[Callable, float]] = {
    "linalg.svd_reconstruction": (svd_reconstruction, 1e-10),
    "linalg.phi_on_unitaries": (phi_on_unitaries, 1e-12),
    "linalg.moore_penrose": (moore_penrose, 1e-10),
    "linalg.cos2_plus_sin2": (trig_identity, 1e-10),
    "ring.evolve_vs_expm": (evolve_vs_expm, 1e-10),
    "ring.kappa2_single": (kappa2_single, 1e-10),
    "ring.mutual_exclusivity": (mutual_exclusivity, 0.5),
    "grassmann.transport_blocks": (transport_blocks, 1e-6),
    "grassmann.gauge_covariance": (gauge_covariance, 1e-9),
    "interferometer.formula": (interferometer_formula, 1e-12),
}


def run_all(seed: int = 0, tol: float | None = None) -> list[SuiteResult]:
    """Run every suite; ``tol`` overrides each suite's own tolerance."""
    out = []
    for name, (fn, default) in SUITES.items():
        worst = float(fn(np.random.default_rng(seed)))
        limit = default if tol is None else tol
        out.append(SuiteResult(name, worst <= limit, worst, limit))
    return out
