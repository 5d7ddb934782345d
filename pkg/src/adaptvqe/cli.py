"""Command-line experiment runner.

Every subcommand reads an optional flat ``key=value`` config file
(``--config``) plus ``key=value`` overrides on the command line, and writes
CSV to ``--out`` (or stdout).  Run ``adaptvqe <command> --help`` for the
keys each command uses.

Exit codes: 0 success, 2 usage error, 3 data error, 4 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chem import CHEMICAL_ACCURACY, MolecularProblem, hartree_fock_state, load_h2, load_problem
from .circuit import NOISELESS, NoiseSpec, compile_exponential_sum, compile_pauli_exponential
from .engine import AdaptConfig, EnergyEvaluator, OptimizerConfig, adapt_run, fixed_ansatz_vqe
from .errors import ContractViolation, DimensionError, ParseError, ResourceError, StalledPoolError
from .pauli import PauliString
from .pools import DEFAULT_FORMAT, build_pool
from .simstate import exact_ground, expectation

EXIT_USAGE, EXIT_DATA, EXIT_RESOURCE = 2, 3, 4

# key -> (type, default); "problem" may repeat
KEYS: dict[str, tuple[type, object]] = {
    "problem": (str, "h2"),
    "pool": (str, "QUBIT_NO_Z"),
    "format": (str, DEFAULT_FORMAT),
    "ansatz": (str, "adapt"),  # adapt | uccsd (vqe, noise-sweep)
    "mode": (str, "exact"),  # exact | shots
    "shots": (int, 4096),
    "t1": (float, math.inf),
    "t2": (float, math.inf),
    "cnot_error": (float, 0.0),
    "p_meas0_prep1": (float, 0.0),
    "spam_ratio": (float, 5.0),
    "optimizer": (str, "quasi_newton_fd"),
    "max_evaluations": (int, 20000),
    "x_tolerance": (float, 1e-8),
    "f_tolerance": (float, 1e-12),
    "simplex_scale": (float, 0.1),
    "fd_step": (float, 1e-5),
    "epsilon": (float, 0.01),
    "max_iterations": (int, 50),
    "growth": (str, "plain"),
    "r": (float, 0.5),
    "t": (float, 1.5),
    "window": (int, 10),
    "n_candidates": (int, 5),
    "sweep": (str, "shots"),  # shots | t1t2 | spam | cnot_error
    "values": (str, ""),
    "t2_ratio": (float, 1.0),  # t2 = t2_ratio * t1 in t1t2 sweeps
    "string": (str, ""),
    "theta": (float, 0.3),
    "index": (int, 0),
    "n_qubits": (int, 0),
    "runs": (int, 1),
    "seed": (int, 0),
}


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    problems: list[str] = field(default_factory=list)

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        return KEYS[key][1]

    def set(self, key: str, raw: str) -> None:
        key = key.strip()
        if key not in KEYS:
            raise UsageError(f"unknown config key {key!r}")
        raw = raw.strip()
        if key == "problem":
            self.problems.extend(x.strip() for x in raw.split(",") if x.strip())
            return
        kind = KEYS[key][0]
        try:
            self.values[key] = kind(raw)
        except ValueError:
            raise UsageError(f"{key}: cannot read {raw!r} as {kind.__name__}") from None

    def validate(self) -> None:
        if self["runs"] < 1:
            raise UsageError("runs must be at least 1")
        if self["mode"] not in ("exact", "shots"):
            raise UsageError("mode must be exact or shots")
        if self["ansatz"] not in ("adapt", "uccsd"):
            raise UsageError("ansatz must be adapt or uccsd")
        for p in self.problems:
            if p != "h2" and not Path(p).is_file():
                raise FileNotFoundError(p)


def read_config(path: str | None, overrides: list[str]) -> ExperimentConfig:
    cfg = ExperimentConfig()
    lines: list[tuple[str, int | None, str]] = []
    if path:
        text = Path(path).read_text(encoding="utf-8")
        lines += [(path, k, ln) for k, ln in enumerate(text.splitlines(), 1)]
    lines += [("<command line>", None, o) for o in overrides]
    for src, lineno, raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise UsageError(f"{src}{'' if lineno is None else f':{lineno}'}: expected key=value, got {line!r}")
        cfg.set(key, value)
    return cfg


# ------------------------------------------------------------ building blocks


def _problem(source: str) -> MolecularProblem:
    return load_h2() if source == "h2" else load_problem(source)


def _optimizer(cfg: ExperimentConfig) -> OptimizerConfig:
    return OptimizerConfig(
        cfg["optimizer"],
        cfg["max_evaluations"],
        cfg["x_tolerance"],
        cfg["f_tolerance"],
        cfg["simplex_scale"],
        cfg["fd_step"],
    )


def _noise(cfg: ExperimentConfig) -> NoiseSpec:
    p = cfg["p_meas0_prep1"]
    return NoiseSpec(
        t1=cfg["t1"],
        t2=cfg["t2"],
        cnot_depolarizing_error=cfg["cnot_error"],
        p_meas0_prep1=p,
        p_meas1_prep0=p / cfg["spam_ratio"],
    )


def _evaluator(problem: MolecularProblem, cfg: ExperimentConfig, seed: int) -> EnergyEvaluator:
    if cfg["mode"] == "exact":
        return EnergyEvaluator.for_problem(problem)
    return EnergyEvaluator.for_problem(problem, mode="sampled", shots=cfg["shots"], noise=_noise(cfg), seed=seed)


def _pool(problem: MolecularProblem, cfg: ExperimentConfig, family: str | None = None):
    return build_pool(family or cfg["pool"], problem.n_qubits, problem.ordering, cfg["format"], problem)


def _adapt_config(problem: MolecularProblem, cfg: ExperimentConfig) -> AdaptConfig:
    return AdaptConfig(
        _pool(problem, cfg),
        epsilon=cfg["epsilon"],
        max_iterations=cfg["max_iterations"],
        growth=cfg["growth"],
        r=cfg["r"],
        t=cfg["t"],
        window=cfg["window"],
        n_candidates=cfg["n_candidates"],
        optimizer=_optimizer(cfg),
    )


def single_run(problem_source: str, cfg: ExperimentConfig, seed: int) -> dict:
    """One ADAPT or UCCSD run; returns the summary fields used by scans and sweeps."""
    problem = _problem(problem_source)
    fci = exact_ground(problem.hamiltonian)[0]
    ev = _evaluator(problem, cfg, seed)
    if cfg["ansatz"] == "uccsd":
        pool = _pool(problem, cfg, "UCCSD")
        ops = [op.operator for op in pool]
        res = fixed_ansatz_vqe(pool, ev, _optimizer(cfg))
        estimate = res.energy if ev.mode == "exact" else ev.energy(ops, res.params)
        exact_e = ev.exact_energy(ops, res.params)
        n_ops = len(ops)
    else:
        rec = adapt_run(problem, _adapt_config(problem, cfg), ev, fci)
        estimate, exact_e, n_ops = rec.final_energy, rec.final_exact_energy, len(rec.ansatz)
    return {
        "fci": fci,
        "energy": estimate,
        "exact_energy": exact_e,
        "error": exact_e - fci,
        "estimate_error": estimate - fci,
        "n_operators": n_ops,
    }


def _run_seed(master: int, k: int) -> int:
    return master ^ k


def _map(fn, jobs: list[tuple], threads: int) -> list:
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, *zip(*jobs)))
    return [fn(*j) for j in jobs]


def _stats(xs) -> dict:
    a = np.abs(np.asarray(xs, dtype=float))
    q1, med, q3 = np.percentile(a, [25, 50, 75])
    return {"median": med, "q1": q1, "q3": q3, "mean": float(a.mean())}


def _write_csv(rows: list[dict], columns: list[str], out) -> None:
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})


# ------------------------------------------------------------ commands


def cmd_diag(cfg: ExperimentConfig, out) -> None:
    for source in cfg.problems or ["h2"]:
        p = _problem(source)
        fci = exact_ground(p.hamiltonian)[0]
        hf = expectation(p.hamiltonian, hartree_fock_state(p))
        print(f"{p.name}: fci={fci:.10f} hf={hf:.10f} correlation={hf - fci:.10f}", file=out)
        print(f"  chemical accuracy band: [{fci:.6f}, {fci + CHEMICAL_ACCURACY:.6f}]", file=out)


def cmd_hf_energy(cfg: ExperimentConfig, out) -> None:
    for source in cfg.problems or ["h2"]:
        p = _problem(source)
        print(f"{p.name}: {expectation(p.hamiltonian, hartree_fock_state(p)):.10f}", file=out)


def cmd_pool(cfg: ExperimentConfig, out) -> None:
    if cfg["n_qubits"]:
        pool = build_pool(cfg["pool"], cfg["n_qubits"], format=cfg["format"])
    else:
        pool = _pool(_problem((cfg.problems or ["h2"])[0]), cfg)
    hist = ", ".join(f"{k} strings: {v}" for k, v in sorted(pool.string_histogram().items()))
    print(f"{pool.name} on {pool.n_spin_orbitals} qubits: {len(pool)} operators ({hist})", file=out)
    for k, op in enumerate(pool):
        print(f"{k}\t{op.kind}\t{op.label}\t{op.n_strings}", file=out)


def cmd_compile(cfg: ExperimentConfig, out) -> None:
    theta = cfg["theta"]
    if cfg["string"]:
        circ = compile_pauli_exponential(PauliString.from_letters(cfg["string"]), theta)
        what = f"exp(-i {theta} {cfg['string']})"
    else:
        if cfg["n_qubits"]:
            pool = build_pool(cfg["pool"], cfg["n_qubits"], format=cfg["format"])
        else:
            pool = _pool(_problem((cfg.problems or ["h2"])[0]), cfg)
        if not 0 <= cfg["index"] < len(pool):
            raise UsageError(f"index {cfg['index']} outside pool of {len(pool)}")
        op = pool[cfg["index"]]
        circ = compile_exponential_sum(op.operator, theta)
        what = f"{pool.name}[{cfg['index']}] {op.label}"
    print(f"# {what}", file=out)
    print(circ.dump().rstrip("\n"), file=out)
    print(f"cnots={circ.cnot_count}", file=out)


def cmd_vqe(cfg: ExperimentConfig, out) -> None:
    p = _problem((cfg.problems or ["h2"])[0])
    fci = exact_ground(p.hamiltonian)[0]
    ev = _evaluator(p, cfg, cfg["seed"])
    pool = _pool(p, cfg, "UCCSD") if cfg["ansatz"] == "uccsd" else _pool(p, cfg)
    res = fixed_ansatz_vqe(pool, ev, _optimizer(cfg))
    ops = [op.operator for op in pool]
    exact_e = ev.exact_energy(ops, res.params)
    _write_csv(
        [{"index": k, "label": op.label, "parameter": float(t)} for k, (op, t) in enumerate(zip(pool, res.params))],
        ["index", "label", "parameter"],
        out,
    )
    print(
        f"# energy={res.energy:.10f} error={exact_e - fci:.3e} evaluations={res.evaluations} converged={res.converged}",
        file=sys.stderr,
    )


def cmd_adapt(cfg: ExperimentConfig, out) -> None:
    p = _problem((cfg.problems or ["h2"])[0])
    fci = exact_ground(p.hamiltonian)[0]
    rec = adapt_run(p, _adapt_config(p, cfg), _evaluator(p, cfg, cfg["seed"]), fci)
    out.write(rec.to_csv())
    ok = "within" if abs(rec.final_error) <= CHEMICAL_ACCURACY else "outside"
    print(
        f"# {len(rec.ansatz)} operators, error={rec.final_error:.3e} ({ok} chemical accuracy), "
        f"converged={rec.converged}",
        file=sys.stderr,
    )


SUMMARY_COLUMNS = ["median", "q1", "q3", "mean", "estimate_median", "runs"]


def cmd_scan(cfg: ExperimentConfig, out, threads: int) -> None:
    if not cfg.problems:
        raise UsageError("scan needs at least one problem= file")
    runs = cfg["runs"] if cfg["mode"] == "shots" else 1
    jobs = [(source, cfg, _run_seed(cfg["seed"], k)) for source in cfg.problems for k in range(runs)]
    results = _map(single_run, jobs, threads)
    rows = []
    for i, source in enumerate(cfg.problems):
        chunk = results[i * runs : (i + 1) * runs]
        p = _problem(source)
        row = {"problem": source, "geometry": p.geometry_tag or "", "fci": chunk[0]["fci"]}
        row.update(_stats([r["error"] for r in chunk]))
        row["estimate_median"] = float(np.median([abs(r["estimate_error"]) for r in chunk]))
        row["runs"] = runs
        rows.append(row)
    rows.sort(key=lambda r: (r["geometry"], r["problem"]))
    _write_csv(rows, ["problem", "geometry", "fci"] + SUMMARY_COLUMNS, out)


def _sweep_config(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    c = ExperimentConfig(dict(cfg.values), list(cfg.problems))
    c.values["mode"] = "shots"
    if axis == "shots":
        c.values["shots"] = int(value)
    elif axis == "t1t2":
        c.values["t1"] = value
        c.values["t2"] = value * cfg["t2_ratio"]
    elif axis == "spam":
        c.values["p_meas0_prep1"] = value
    elif axis == "cnot_error":
        c.values["cnot_error"] = value
    else:
        raise UsageError(f"unknown sweep axis {axis!r}")
    return c


def cmd_noise_sweep(cfg: ExperimentConfig, out, threads: int) -> None:
    axis = cfg["sweep"]
    try:
        values = [float(v) for v in cfg["values"].split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"values must be a comma-separated list of numbers, got {cfg['values']!r}") from None
    if not values:
        raise UsageError("noise-sweep needs values=v1,v2,...")
    source = (cfg.problems or ["h2"])[0]
    jobs = [
        (source, _sweep_config(cfg, axis, v), _run_seed(cfg["seed"], k)) for v in values for k in range(cfg["runs"])
    ]
    results = _map(single_run, jobs, threads)
    rows = []
    for i, v in enumerate(values):
        chunk = results[i * cfg["runs"] : (i + 1) * cfg["runs"]]
        row = {"axis": axis, "value": v}
        row.update(_stats([r["error"] for r in chunk]))
        row["estimate_median"] = float(np.median([abs(r["estimate_error"]) for r in chunk]))
        row["runs"] = cfg["runs"]
        rows.append(row)
    rows.sort(key=lambda r: r["value"])
    _write_csv(rows, ["axis", "value"] + SUMMARY_COLUMNS, out)


COMMANDS = {
    "diag": "FCI and Hartree-Fock energies",
    "hf-energy": "Hartree-Fock reference energy",
    "pool": "operator pool listing and size",
    "compile": "circuit for a Pauli or pool-operator exponential",
    "vqe": "fixed-ansatz VQE (UCCSD or a whole pool)",
    "adapt": "one ADAPT run, per-iteration CSV",
    "scan": "ADAPT/UCCSD over several problem files",
    "noise-sweep": "median/IQR error against one noise parameter",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptvqe", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("settings", nargs="*", metavar="key=value", help="config overrides")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="master seed; run k uses seed XOR k")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--runs", type=int, help="runs per point for median statistics")
        p.add_argument("--threads", type=int, default=1, help="worker processes for scans and sweeps")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = read_config(args.config, args.settings)
        if args.seed is not None:
            cfg.values["seed"] = args.seed
        if args.runs is not None:
            cfg.values["runs"] = args.runs
        cfg.validate()
        buf = io.StringIO()
        cmd = args.command
        if cmd in ("scan", "noise-sweep"):
            {"scan": cmd_scan, "noise-sweep": cmd_noise_sweep}[cmd](cfg, buf, max(1, args.threads))
        else:
            {
                "diag": cmd_diag,
                "hf-energy": cmd_hf_energy,
                "pool": cmd_pool,
                "compile": cmd_compile,
                "vqe": cmd_vqe,
                "adapt": cmd_adapt,
            }[cmd](cfg, buf)
    except (OSError, ParseError, DimensionError, ContractViolation, StalledPoolError) as exc:
        print(f"adaptvqe: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ValueError) as exc:
        print(f"adaptvqe: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"adaptvqe: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
