"""
Command-line front end.

    ringgp sweep     --config ring.json --grid 0:2*pi:1e-3 [--out sweep.csv]
    ringgp gp        --config pulses.json
    ringgp compose   --config pulses.json
    ringgp interfere --config experiment.json [--mode ancilla|direct]
    ringgp recover   --config experiment.json [--mode ...] [--budget N] [--seed N] [--tol X]
    ringgp selftest  [--seed N] [--tol X]

Exit codes: 0 success, 1 selftest failure, 2 config error, 3 numeric or
domain error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import sys
from collections.abc import Sequence

import numpy as np

from . import interferometer as itf
from . import ring
from . import selftest
from .errors import ConvergenceFailure, RingGPError
from .linalg import Status, phase_aligned_distance

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CONVERGENCE = 0, 1, 2, 3, 4


class ConfigError(Exception):
    pass


# -- serialisation ----------------------------------------------------------------


def fmt(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x}")
    return format(x, ".17g")


def encode(obj) -> str:
    """JSON with floats written to 17 significant digits."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return encode(matrix_json(obj) if np.iscomplexobj(obj) else obj.tolist())
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(encode(v) for v in obj) + "]"
    if isinstance(obj, Status):
        return json.dumps(obj.value)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def matrix_json(m) -> list:
    """Complex array as nested lists of ``[re, im]`` pairs."""
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in m]
    return [matrix_json(row) for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise ConfigError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


# -- config -----------------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Arithmetic on numbers and ``pi`` (e.g. ``2*pi``, ``pi/3``)."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad number {text!r}") from exc


def parse_grid(spec: str) -> np.ndarray:
    """``START:STOP:STEP`` -> areas from START to STOP inclusive."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError("grid must be START:STOP:STEP")
    start, stop, step = (parse_number(p) for p in parts)
    if step <= 0 or stop < start:
        raise ConfigError("grid needs STEP > 0 and STOP >= START")
    n = int(math.floor((stop - start) / step + 1e-9))
    grid = start + step * np.arange(n + 1)
    if stop - grid[-1] > 1e-9 * step:
        grid = np.append(grid, stop)
    else:
        grid[-1] = stop
    return grid


def load_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def pulses_from(config: dict) -> list[ring.PulseSpec]:
    records = config.get("pulses", [config])
    if not isinstance(records, list) or not records:
        raise ConfigError("'pulses' must be a non-empty list")
    known = {f"j{b}" for b in ring.BOND_KEYS} | {f"d{b}" for b in ring.BOND_KEYS} | {"area"}
    out = []
    for rec in records:
        if not isinstance(rec, dict):
            raise ConfigError("each pulse must be an object")
        fields = {k: v for k, v in rec.items() if k in known}
        try:
            out.append(ring.PulseSpec.from_mapping({k: float(v) for k, v in fields.items()}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad pulse record {rec}: {exc}") from exc
    return out


def evolution_from(pulses: Sequence[ring.PulseSpec], strict: bool = True) -> ring.EvolutionOperator:
    if len(pulses) == 1:
        return ring.evolve(pulses[0], strict=strict)
    if len(pulses) == 2:
        return ring.compose_pulses(pulses[0], pulses[1], strict=strict)
    raise ConfigError("at most two pulses are supported")


def probes_from(config: dict, l: int) -> list[np.ndarray]:
    if "probes" not in config:
        return itf.trine_probes(l)
    try:
        return [matrix_from_json(p) for p in config["probes"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad probe list: {exc}") from exc


# -- commands ---------------------------------------------------------------------


def _status_name(s) -> str:
    return s.value if isinstance(s, Status) else str(s)


def cmd_sweep(args, out) -> int:
    config = load_config(args.config)
    couplings = pulses_from(config)[0].couplings
    grid_spec = args.grid or config.get("grid")
    if not grid_spec:
        raise ConfigError("sweep needs --grid START:STOP:STEP")
    grid = parse_grid(grid_spec)
    ring.t_matrix(couplings, strict=True)
    rows = ring.sweep_area(couplings, grid, tol=args.tol or ring.TOL)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["area", "cos_sign_1", "cos_sign_2", "c", "d", "k1_status_1", "k1_status_2",
                "k2_status_12", "k2_status_21", "boundary_flags"])
    for r in rows:
        w.writerow([fmt(r.area), *r.cos_signs,
                    "" if r.c is None else r.c, "" if r.d is None else r.d,
                    *(_status_name(s) for s in r.k1_status),
                    *(_status_name(s) for s in r.k2_status), r.flags])
    return EXIT_OK


def _gp_json(res) -> list:
    return [res.isometry, res.status.status.value]


def gp_report(pulses: Sequence[ring.PulseSpec], tol: float) -> dict:
    if len(pulses) == 1:
        g1, g2, lab1, lab2 = ring.gp_kappa1(pulses[0], tol=tol)
        k2 = ring.gp_kappa2_single(pulses[0], tol=tol)
    else:
        op = evolution_from(pulses)
        g1 = ring._gp(op.sigma11, tol)
        g2 = ring._gp(op.sigma22, tol)
        lab1 = lab2 = None
        k2 = ring.gp_kappa2_from(op, tol)
    k1 = []
    for g, lab in ((g1, lab1), (g2, lab2)):
        k1.append(_gp_json(g) + [lab.c if lab else None, lab.d if lab else None])
    return {"kappa1": k1, "kappa2": [_gp_json(g) for g in k2]}


def cmd_gp(args, out) -> int:
    report = gp_report(pulses_from(load_config(args.config)), args.tol or ring.TOL)
    out.write(encode(report) + "\n")
    return EXIT_OK


def cmd_compose(args, out) -> int:
    pulses = pulses_from(load_config(args.config))
    if len(pulses) != 2:
        raise ConfigError("compose needs exactly two pulses")
    op = ring.compose_pulses(*pulses)
    report = {
        "matrix": op.matrix,
        "blocks": {f"{k}{l}": op.block(k, l) for k in (1, 2) for l in (1, 2)},
        "kappa2": [_gp_json(g) for g in ring.gp_kappa2_from(op)],
    }
    out.write(encode(report) + "\n")
    return EXIT_OK


def _mode(args, config) -> str:
    mode = args.mode or config.get("mode", "direct")
    if mode not in ("ancilla", "direct"):
        raise ConfigError(f"unknown mode {mode!r}")
    return mode


def cmd_interfere(args, out) -> int:
    config = load_config(args.config)
    l = int(config.get("l", 1))
    op = evolution_from(pulses_from(config))
    try:
        w = itf.w_from_params(itf.WGenParams(**config.get("w", {})))
    except TypeError as exc:
        raise ConfigError(f"bad W parameters: {exc}") from exc
    mode = _mode(args, config)
    run = itf.run_direct if mode == "direct" else itf.run_ancilla
    probs = [run(p, l, op, w) for p in probes_from(config, l)]
    out.write(encode({"mode": mode, "l": l, "probabilities": probs, "w": w.matrix}) + "\n")
    return EXIT_OK


def cmd_recover(args, out) -> int:
    config = load_config(args.config)
    l = int(config.get("l", 1))
    pulses = pulses_from(config)
    op = evolution_from(pulses)
    mode = _mode(args, config)
    budget = int(args.budget or config.get("budget", 20000))
    seed = int(args.seed if args.seed is not None else config.get("seed", 0))
    tol = float(args.tol or config.get("tol", 1e-4))
    truth = ring.gp_kappa2_from(op)[0 if l == 1 else 1]
    if truth.status.status is not Status.FULL:
        raise ring.SingularT("target off-diagonal phase is not fully defined; recovery needs full rank")
    report = {"mode": mode, "l": l, "budget": budget, "seed": seed, "ground_truth": truth.isometry}
    try:
        res = itf.recover_gp(probes_from(config, l), l, op, mode=mode, budget=budget, seed=seed)
    except ConvergenceFailure as exc:
        best = exc.best
        report.update(status="convergence_failure", message=str(exc))
        if best is not None:
            report.update(best=best.to_json(),
                          distance=phase_aligned_distance(best.estimate, truth.isometry))
        out.write(encode(report) + "\n")
        return EXIT_CONVERGENCE
    if mode == "direct":
        dist = phase_aligned_distance(res.estimate, truth.isometry)
    else:
        dist = float(np.linalg.norm(res.estimate - truth.isometry))
    ok = dist <= tol
    report.update(status="ok" if ok else "above_tolerance", distance=dist, tol=tol, **res.to_json())
    out.write(encode(report) + "\n")
    return EXIT_OK if ok else EXIT_CONVERGENCE


def cmd_selftest(args, out) -> int:
    results = selftest.run_all(seed=args.seed or 0, tol=args.tol)
    for r in results:
        out.write(r.line() + "\n")
    failed = sum(not r.passed for r in results)
    out.write(f"{len(results) - failed}/{len(results)} suites passed\n")
    return EXIT_SELFTEST if failed else EXIT_OK


COMMANDS = {
    "sweep": cmd_sweep,
    "gp": cmd_gp,
    "compose": cmd_compose,
    "interfere": cmd_interfere,
    "recover": cmd_recover,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ringgp", description="Off-diagonal geometric phases of a four-qubit ring.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--grid")
    p.add_argument("--mode", choices=("ancilla", "direct"))
    p.add_argument("--budget", type=int)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceFailure as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (RingGPError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
