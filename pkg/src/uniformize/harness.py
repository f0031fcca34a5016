"""
Harness - Runs configured scenarios and writes result tables and manifests.

Tables are computed first and written afterwards by one ordered emitter,
so a failing scenario leaves no output files behind and the written
tables do not depend on the thread count.
"""
import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import (
    TimeGrid,
    Trajectory,
    classical_vlasov_evolve,
    hartree_evolve,
    sector_propagate,
    vlasov_evolve_density,
)
from .hamiltonian_algebra import StateDensity
from .meanfield import (
    SolitonProblem,
    convergence_study,
    epsilon_soliton,
    gap_study,
    generalized_soliton_check,
    soliton_orbit,
    tail_weight,
)
from .tensor_core import FULL_DIMENSION_CAP, Sector, sector_dimension, symmetric_power
from .uniformization import UniformizationParams, build_Hn
from .verification import algebra_suite, appendix_identity_suite, commutation_suite

logger = logging.getLogger(__name__)

MAX_IDENTITY_SUITE_N = 4


def _format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value


@dataclass
class ResultTable:
    """One result table of a scenario, rows sorted by sort_keys on output."""

    scenario: str
    columns: Tuple[str, ...]
    rows: List[Tuple] = field(default_factory=list)
    sort_keys: Tuple[str, ...] = ()
    metadata: Dict[str, Any] = field(default_factory=dict)

    def sorted_rows(self) -> List[Tuple]:
        if not self.sort_keys:
            return list(self.rows)
        indices = [self.columns.index(key) for key in self.sort_keys]
        return sorted(self.rows, key=lambda row: tuple(row[i] for i in indices))

    @property
    def passed(self) -> bool:
        return bool(self.metadata.get("passed", True))

    def to_csv(self, filepath: Path):
        """Write as CSV: '.' decimals, 17 significant digits."""
        with open(filepath, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.sorted_rows():
                writer.writerow([_format_value(v) for v in row])

    def to_json(self, filepath: Path):
        document = {
            "scenario": self.scenario,
            "columns": list(self.columns),
            "rows": [_json_value(list(row)) for row in self.sorted_rows()],
            "metadata": _json_value(self.metadata),
        }
        with open(filepath, "w") as f:
            json.dump(document, f, sort_keys=True, indent=2)
            f.write("\n")

    def __repr__(self) -> str:
        return f"ResultTable({self.scenario}, columns={len(self.columns)}, rows={len(self.rows)})"


@dataclass
class RunResult:
    files: List[Path]
    manifest: Path
    tables: List[ResultTable]

    @property
    def passed(self) -> bool:
        return all(table.passed for table in self.tables)


def _time_grid(config: ExperimentConfig) -> TimeGrid:
    run = config.run
    return TimeGrid(run.t0, run.t1, run.dt, run.store_every)


def _trajectory_table(scenario: str, trajectory: Trajectory) -> ResultTable:
    rows = []
    for t, state, norm, gamma in zip(trajectory.times, trajectory.states, trajectory.norms, trajectory.gammas):
        row = [t]
        if trajectory.kind != "classical":
            for value in np.asarray(state).reshape(-1):
                row += [float(value.real), float(value.imag)]
        rows.append(tuple(row + [norm, gamma]))
    metadata = dict(trajectory.metadata)
    metadata.update(max_norm_drift=trajectory.max_norm_drift(), max_gamma_drift=trajectory.max_gamma_drift())
    return ResultTable(scenario, tuple(trajectory.columns()), rows, ("t",), metadata)


def _epsilons(config: ExperimentConfig) -> List[float]:
    return sorted(set(config.run.epsilon_list or [config.run.epsilon]), reverse=True)


def _soliton_problem(config: ExperimentConfig, spec) -> SolitonProblem:
    run = config.run
    integrals = run.integral_matrices(config.model)
    phi = None if run.phi is None else run.initial_ket(spec.realization.d)
    targets = run.targets
    if targets is None:
        if phi is None:
            raise ValueError("run.targets is required when run.phi is not given")
        targets = [float(np.real(np.vdot(phi, phi)))] + [float(np.real(np.vdot(phi, P @ phi))) for P in integrals]
    return SolitonProblem(spec, integrals, targets, phi=phi, multipliers=run.multipliers)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _algebra_verify(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    run = config.run
    d = config.model.dimension
    n_identity = min(run.n_max, MAX_IDENTITY_SUITE_N)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        jobs = [
            pool.submit(algebra_suite, d, 3, run.trials, run.seed),
            pool.submit(appendix_identity_suite, d, n_identity, run.trials, run.seed),
            pool.submit(commutation_suite, d, run.n_max, run.trials, run.seed),
        ]
        reports = [job.result() for job in jobs]
    rows = []
    for report in reports:
        for check in report.checks:
            rows.append((report.title, check.name, check.max_residual, check.tolerance, check.trials, check.passed))
    passed = all(report.passed for report in reports)
    metadata = {"passed": passed, "max_residual": max(r.max_residual for r in reports), "identity_n_max": n_identity}
    return [ResultTable(config.scenario, ("suite", "check", "max_residual", "tolerance", "trials", "passed"),
                        rows, (), metadata)]


def _hartree(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    spec = config.model.build_spec()
    phi = config.run.initial_ket(spec.realization.d)
    trajectory = hartree_evolve(spec, phi, _time_grid(config), config.run.norm_tolerance)
    return [_trajectory_table(config.scenario, trajectory)]


def _vlasov_quantum(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    spec = config.model.build_spec()
    rho0 = StateDensity.from_ket(spec.realization, config.run.initial_ket(spec.realization.d))
    trajectory = vlasov_evolve_density(spec, rho0, _time_grid(config), config.run.norm_tolerance)
    return [_trajectory_table(config.scenario, trajectory)]


def _vlasov_classical(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    spec = config.model.build_spec()
    trajectory = classical_vlasov_evolve(spec, config.model.initial_density(), _time_grid(config))
    return [_trajectory_table(config.scenario, trajectory)]


def _uniformized(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    run = config.run
    spec = config.model.build_spec()
    phi = run.initial_ket(spec.realization.d)
    ns = sorted(set(run.ns or [run.n_max]))
    params = UniformizationParams(run.epsilon, max(run.n_max, ns[-1]), run.parity)
    grid = _time_grid(config)

    def propagate(n: int) -> Trajectory:
        return sector_propagate(build_Hn(spec, n, params), symmetric_power(phi, n, params.parity), grid)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        trajectories = list(pool.map(propagate, ns))
    rows = []
    for n, trajectory in zip(ns, trajectories):
        rows += [(n, t, norm, energy) for t, norm, energy in zip(trajectory.times, trajectory.norms, trajectory.gammas)]
    return [ResultTable(config.scenario, ("n", "t", "j_norm", "energy"), rows, ("n", "t"),
                        {"epsilon": run.epsilon, "parity": run.parity})]


def _epsilon_convergence(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    run = config.run
    spec = config.model.build_spec()
    phi = run.initial_ket(spec.realization.d)
    study = convergence_study(spec, phi, _epsilons(config), _time_grid(config), run.n_max, threads)
    return [ResultTable(config.scenario, study.columns, study.rows, ("epsilon", "t"),
                        {"monotone": study.monotone, "orders": study.orders})]


def _gap(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    run = config.run
    spec = config.model.build_spec()
    seed = None if run.phi is None else run.initial_ket(spec.realization.d)
    ns = run.ns or list(range(1, run.n_max + 1))
    rows = gap_study(spec, run.nu, ns, run.parity, seed, threads)
    columns = ("n", "epsilon", "lambda_n", "lambda_n1", "gap", "omega_hartree", "abs_diff")
    return [ResultTable(config.scenario, columns, rows, ("n",), {"nu": run.nu})]


def _soliton(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    spec = config.model.build_spec()
    problem = _soliton_problem(config, spec)
    report = generalized_soliton_check(problem, _time_grid(config))
    k = len(problem.integrals)
    columns = ("residual", "fd_residual", "multiplier_gap", "max_deviation") \
        + tuple(f"nu_{j}" for j in range(k)) + tuple(f"fd_nu_{j}" for j in range(k))
    row = (report.residual, report.fd_residual, report.multiplier_gap, report.max_deviation) \
        + tuple(report.multipliers) + tuple(report.fd_multipliers)
    return [ResultTable(config.scenario, columns, [row], (), {"targets": problem.targets.tolist()})]


def _epsilon_soliton(config: ExperimentConfig, threads: int) -> List[ResultTable]:
    run = config.run
    spec = config.model.build_spec()
    problem = _soliton_problem(config, spec)
    problem.extremal()
    grid = _time_grid(config)
    orbit = soliton_orbit(problem, grid.stored_times, grid.t0)

    def solve(eps: float) -> Trajectory:
        return epsilon_soliton(problem, UniformizationParams(eps, run.n_max, run.parity), grid)

    epsilons = _epsilons(config)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        trajectories = list(pool.map(solve, epsilons))
    rows = []
    for eps, trajectory in zip(epsilons, trajectories):
        for t, state, reference in zip(trajectory.times, trajectory.states, orbit):
            rows.append((eps, t, float(np.linalg.norm(state - reference))))
    return [ResultTable(config.scenario, ("epsilon", "t", "distance"), rows, ("epsilon", "t"),
                        {"multipliers": problem.resolved_multipliers().tolist()})]


SCENARIO_RUNNERS: Dict[str, Callable[[ExperimentConfig, int], List[ResultTable]]] = {
    "algebra-verify": _algebra_verify,
    "hartree": _hartree,
    "vlasov-quantum": _vlasov_quantum,
    "vlasov-classical": _vlasov_classical,
    "uniformized": _uniformized,
    "epsilon-convergence": _epsilon_convergence,
    "gap": _gap,
    "soliton": _soliton,
    "epsilon-soliton": _epsilon_soliton,
}


def run(config: ExperimentConfig, threads: int = 1) -> RunResult:
    """
    Execute the configured scenario and write its tables and manifest.

    Files are named {run_id}_{scenario}_{index}.{format}; the manifest
    {run_id}_manifest.json records the config hash, library version,
    wall time and per-table timings.

    Raises:
        NumericalGuardError: If a numerical guard trips during the scenario
        ValueError: If scenario parameters are inconsistent
    """
    if threads < 1:
        raise ValueError("threads must be at least 1")
    start = time.perf_counter()
    logger.info("Running scenario %s (hash %s)", config.scenario, config.config_hash()[:12])
    tables = SCENARIO_RUNNERS[config.scenario](config, threads)
    compute_time = time.perf_counter() - start

    out_dir = Path(config.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    files, timings = [], []
    for index, table in enumerate(tables):
        path = out_dir / f"{config.output.run_id}_{config.scenario}_{index}.{config.output.format}"
        write_start = time.perf_counter()
        if config.output.format == "csv":
            table.to_csv(path)
        else:
            table.to_json(path)
        timings.append({"file": path.name, "rows": len(table.rows), "write_s": time.perf_counter() - write_start})
        files.append(path)
        logger.info("Wrote %s (%d rows)", path, len(table.rows))

    manifest = {
        "scenario": config.scenario,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "version": __version__,
        "threads": threads,
        "compute_s": compute_time,
        "wall_time_s": time.perf_counter() - start,
        "files": [path.name for path in files],
        "tables": timings,
        "metadata": [_json_value(table.metadata) for table in tables],
    }
    manifest_path = out_dir / f"{config.output.run_id}_manifest.json"
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    return RunResult(files, manifest_path, tables)


def describe(config: ExperimentConfig) -> str:
    """
    Derived sizes of a run: sector dimensions, memory of one dense operator
    per sector, coherent tail weights and dimension-cap notes.
    """
    model, run_config = config.model, config.run
    lines = [f"scenario: {config.scenario}", f"config hash: {config.config_hash()}"]
    if model.is_classical:
        grid = model.phase_grid()
        points = grid.n_q * grid.n_p
        lines.append(f"phase-space grid: {grid.n_q} x {grid.n_p} = {points} nodes")
        lines.append(f"dense two-body kernel: {points ** 2 * 8} bytes "
                     f"({'allowed' if points <= FULL_DIMENSION_CAP else 'exceeds cap'})")
        return "\n".join(lines)

    d = model.dimension
    sector = Sector.from_parity(run_config.parity)
    n_top = max([run_config.n_max] + list(run_config.ns))
    dims = [sector_dimension(d, n, sector) for n in range(n_top + 1)]
    lines.append(f"single-particle dimension d: {d}, parity '{run_config.parity}'")
    lines.append(f"sector dimensions n=0..{n_top}: {' '.join(str(v) for v in dims)} (total {sum(dims)})")
    lines.append(f"memory for dense sector operators: {sum(v * v for v in dims) * 16} bytes")
    full = d ** n_top
    if full > FULL_DIMENSION_CAP:
        lines.append(f"note: full tensor power d^{n_top} = {full} exceeds the full-power cap {FULL_DIMENSION_CAP}; "
                     f"sector dimension {dims[-1]} allowed")

    phi = run_config.initial_ket(d)
    J = model.metric_object().J if model.metric is not None else np.eye(d)
    u = float(np.real(phi.conj() @ J @ phi))
    for eps in _epsilons(config):
        weight = tail_weight(u, eps, run_config.n_max)
        mean = abs(u) / eps
        flag = "ok" if weight <= run_config.max_tail else "exceeds max_tail"
        lines.append(f"epsilon={eps:g}: |phi|^2={u:g}, Poisson mean {mean:g}, "
                     f"tail beyond n_max={run_config.n_max}: {weight:.3e} ({flag})")
        if math.isinf(weight):
            lines.append("  tail weight overflows; raise epsilon")
    return "\n".join(lines)
