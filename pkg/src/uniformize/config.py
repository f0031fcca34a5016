"""
ExperimentConfig - JSON experiment descriptions and their validation.

A config is one JSON object with the keys "scenario", "model", "run" and
"output". Complex matrices and vectors are nested arrays whose innermost
entries are [re, im] pairs.
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin, get_type_hints

import numpy as np

from .errors import ConfigError, UniformizeError
from .hamiltonian_algebra import ClassicalRealization, HamiltonianFunctionalSpec, QuantumRealization
from .phase_space import GridSpec
from .tensor_core import Metric
from .uniformization import build_lattice_hartree, build_two_mode, lattice_momentum, on_site_kernel

logger = logging.getLogger(__name__)

SCENARIOS = (
    "algebra-verify",
    "hartree",
    "vlasov-quantum",
    "vlasov-classical",
    "uniformized",
    "epsilon-convergence",
    "gap",
    "soliton",
    "epsilon-soliton",
)
MODEL_KINDS = ("tensors", "lattice", "two_mode", "classical")
CLASSICAL_HAMILTONIANS = ("free", "harmonic")
OUTPUT_FORMATS = ("csv", "json")
DEFAULT_SEED = 42


def parse_complex(value: Any, name: str = "value") -> np.ndarray:
    """
    Nested [re, im] pairs to a complex array; the last axis must have length 2.

    Raises:
        ConfigError: If the value is not numeric or not paired
    """
    try:
        array = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be numeric [re, im] pairs") from exc
    if array.ndim == 0 or array.shape[-1] != 2:
        raise ConfigError(f"{name} must be nested [re, im] pairs, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ConfigError(f"{name} must be finite")
    return array[..., 0] + 1j * array[..., 1]


def encode_complex(array: np.ndarray) -> List:
    """Inverse of parse_complex."""
    array = np.asarray(array, dtype=complex)
    return np.stack([array.real, array.imag], axis=-1).tolist()


def _check_keys(section: str, data: Any, allowed):
    if not isinstance(data, dict):
        raise ConfigError(f"'{section}' must be a JSON object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown key(s) in '{section}': {', '.join(unknown)}")


def _matches(value: Any, hint: Any) -> bool:
    origin = get_origin(hint)
    if hint is Any:
        return True
    if origin is Union:
        return any(_matches(value, arg) for arg in get_args(hint))
    if hint is type(None):
        return value is None
    if hint is list or origin is list:
        args = get_args(hint)
        return isinstance(value, list) and (not args or all(_matches(item, args[0]) for item in value))
    if hint is dict or origin is dict:
        return isinstance(value, dict)
    if isinstance(value, bool):
        return hint is bool
    if hint is float:
        return isinstance(value, (int, float))
    if hint is int:
        return isinstance(value, int)
    return isinstance(value, hint)


def _check_types(section: str, cls, data: Dict[str, Any]):
    hints = get_type_hints(cls)
    for name, value in data.items():
        if not _matches(value, hints[name]):
            raise ConfigError(f"{section}.{name} has the wrong type: got {value!r}")


def _from_section(cls, section: str, data: Any):
    names = [f.name for f in fields(cls)]
    _check_keys(section, data, names)
    _check_types(section, cls, data)
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"Invalid '{section}' section: {exc}") from exc


@dataclass(frozen=True)
class ModelConfig:
    """
    Hamiltonian functional description.

    kind "tensors" takes d, W (list of [re, im] matrices for m = 1..N) and an
    optional metric signature; "lattice" takes L, hopping, onsite and either
    g (on-site kernel) or omega; "two_mode" takes g; "classical" takes a
    grid, the Gaussian initial blob and either a named single-particle
    hamiltonian ("free" or "harmonic", "free" when neither is given) or W
    as real grid arrays: a field of the grid shape and an optional
    symmetric kernel over the flattened nodes, either of which may be null.
    """

    kind: str
    d: Optional[int] = None
    W: Optional[List] = None
    metric: Optional[List[int]] = None
    L: Optional[int] = None
    hopping: float = 1.0
    onsite: float = 0.0
    g: Optional[float] = None
    omega: Optional[List[List[float]]] = None
    grid: Optional[Dict[str, Any]] = None
    hamiltonian: Optional[str] = None
    blob: Optional[Dict[str, float]] = None

    def validate(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.kind == "tensors" and (self.d is None or not self.W):
            raise ConfigError("model.kind 'tensors' needs d and a non-empty W list")
        if self.kind == "lattice":
            if self.L is None:
                raise ConfigError("model.kind 'lattice' needs L")
            if (self.g is None) == (self.omega is None):
                raise ConfigError("model.kind 'lattice' needs exactly one of g and omega")
        if self.kind == "two_mode" and self.g is None:
            raise ConfigError("model.kind 'two_mode' needs g")
        if self.kind == "classical":
            if self.grid is None:
                raise ConfigError("model.kind 'classical' needs a grid")
            if self.hamiltonian is not None and self.W is not None:
                raise ConfigError("model.kind 'classical' takes either hamiltonian or W, not both")
            if self.hamiltonian is not None and self.hamiltonian not in CLASSICAL_HAMILTONIANS:
                raise ConfigError(f"model.hamiltonian must be one of {CLASSICAL_HAMILTONIANS}")
            if self.W is not None and not 1 <= len(self.W) <= 2:
                raise ConfigError("Classical model.W holds a field and an optional kernel")

    @property
    def is_classical(self) -> bool:
        return self.kind == "classical"

    @property
    def dimension(self) -> int:
        """Single-particle dimension d (grid nodes for classical models)."""
        if self.kind == "tensors":
            return int(self.d)
        if self.kind == "lattice":
            return int(self.L)
        if self.kind == "two_mode":
            return 2
        shape = self.phase_grid().shape
        return shape[0] * shape[1]

    def metric_object(self) -> Optional[Metric]:
        return None if self.metric is None else Metric.signature(self.metric)

    def phase_grid(self) -> GridSpec:
        grid = dict(self.grid or {})
        _check_keys("model.grid", grid, ("q_range", "p_range", "shape", "periodic"))
        return GridSpec(grid["q_range"], grid["p_range"], grid["shape"], tuple(grid.get("periodic", (True, True))))

    def build_spec(self) -> HamiltonianFunctionalSpec:
        """The Hamiltonian functional this model describes."""
        metric = self.metric_object()
        if self.kind == "tensors":
            W = [None if w is None else parse_complex(w, f"model.W[{m}]") for m, w in enumerate(self.W, start=1)]
            return HamiltonianFunctionalSpec(QuantumRealization(int(self.d), metric), W)
        if self.kind == "lattice":
            L = int(self.L)
            omega = on_site_kernel(L, self.g) if self.g is not None else np.asarray(self.omega, dtype=float)
            return build_lattice_hartree(L, self.hopping, omega, self.onsite, metric)
        if self.kind == "two_mode":
            return build_two_mode(self.g, metric)
        grid = self.phase_grid()
        if self.W is not None:
            W = [self._real_array(m, w) for m, w in enumerate(self.W, start=1)]
            return HamiltonianFunctionalSpec(ClassicalRealization(grid), W)
        if self.hamiltonian == "harmonic":
            W1 = grid.field(lambda q, p: 0.5 * (p ** 2 + q ** 2))
        else:
            W1 = grid.field(lambda q, p: 0.5 * p ** 2)
        return HamiltonianFunctionalSpec(ClassicalRealization(grid), [W1])

    @staticmethod
    def _real_array(m: int, w) -> Optional[np.ndarray]:
        if w is None:
            return None
        try:
            array = np.asarray(w, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"model.W[{m}] must be a real numeric array") from exc
        if not np.all(np.isfinite(array)):
            raise ConfigError(f"model.W[{m}] must be finite")
        return array

    def initial_density(self) -> np.ndarray:
        """Gaussian blob of unit mass centered at (q0, p0) with width sigma."""
        grid = self.phase_grid()
        blob = dict(self.blob or {})
        _check_keys("model.blob", blob, ("q0", "p0", "sigma"))
        q0, p0, sigma = blob.get("q0", 0.0), blob.get("p0", 0.0), blob.get("sigma", 0.5)
        if sigma <= 0:
            raise ConfigError("model.blob.sigma must be positive")
        rho = grid.field(lambda q, p: np.exp(-((q - q0) ** 2 + (p - p0) ** 2) / (2 * sigma ** 2)))
        return rho / grid.integrate(rho)


@dataclass(frozen=True)
class RunConfig:
    """
    Time grid, couplings and scenario parameters.

    phi is an [re, im] vector; when omitted the first basis vector scaled
    to norm nu is used. integrals lists [re, im] matrices or the name
    "momentum" (lattice quasi-momentum); targets start with nu.
    """

    t0: float = 0.0
    t1: float = 1.0
    dt: float = 0.01
    store_every: int = 1
    epsilon: float = 0.5
    epsilon_list: List[float] = field(default_factory=list)
    n_max: int = 8
    ns: List[int] = field(default_factory=list)
    nu: float = 1.0
    parity: str = "+"
    phi: Optional[List] = None
    seed: int = DEFAULT_SEED
    trials: int = 50
    integrals: List[Any] = field(default_factory=list)
    targets: Optional[List[float]] = None
    multipliers: Optional[List[float]] = None
    norm_tolerance: float = 1e-6
    max_tail: float = 1e-6

    def validate(self):
        if not all(np.isfinite([self.t0, self.t1, self.dt, self.epsilon, self.nu])):
            raise ConfigError("run parameters must be finite")
        if self.dt <= 0 or self.t1 < self.t0:
            raise ConfigError("run needs dt > 0 and t1 >= t0")
        if self.epsilon <= 0 or any(e <= 0 for e in self.epsilon_list):
            raise ConfigError("epsilon values must be positive")
        if self.n_max < 1:
            raise ConfigError("run.n_max must be at least 1")
        if any(n < 1 for n in self.ns):
            raise ConfigError("run.ns entries must be at least 1")
        if self.nu <= 0:
            raise ConfigError("run.nu must be positive")
        if self.parity not in ("+", "-"):
            raise ConfigError("run.parity must be '+' or '-'")
        if self.trials < 1:
            raise ConfigError("run.trials must be at least 1")
        if self.norm_tolerance <= 0 or self.max_tail <= 0:
            raise ConfigError("Tolerances must be positive")

    def initial_ket(self, d: int) -> np.ndarray:
        if self.phi is None:
            psi = np.zeros(d, dtype=complex)
            psi[0] = np.sqrt(self.nu)
            return psi
        psi = parse_complex(self.phi, "run.phi")
        if psi.shape != (d,):
            raise ConfigError(f"run.phi must have {d} entries, got shape {psi.shape}")
        return psi

    def integral_matrices(self, model: ModelConfig) -> List[np.ndarray]:
        matrices = []
        for j, item in enumerate(self.integrals):
            if item == "momentum":
                if model.kind != "lattice":
                    raise ConfigError("Integral 'momentum' needs a lattice model")
                matrices.append(lattice_momentum(int(model.L)))
            else:
                matrices.append(parse_complex(item, f"run.integrals[{j}]"))
        return matrices


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    format: str = "csv"
    run_id: str = "run"

    def validate(self):
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(f"output.format must be one of {OUTPUT_FORMATS}, got {self.format!r}")
        if not self.run_id or any(c in self.run_id for c in "/\\"):
            raise ConfigError("output.run_id must be a plain file-name prefix")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    model: ModelConfig
    run: RunConfig = field(default_factory=RunConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Parse and validate a config document.

        Validation builds the model's Hamiltonian functional, so
        non-Hermitian or non-symmetric tensors are rejected here.

        Raises:
            ConfigError: On any schema or validation failure
        """
        _check_keys("config", data, ("scenario", "model", "run", "output"))
        if "scenario" not in data or "model" not in data:
            raise ConfigError("Config needs 'scenario' and 'model'")
        config = cls(
            scenario=data["scenario"],
            model=_from_section(ModelConfig, "model", data["model"]),
            run=_from_section(RunConfig, "run", data.get("run", {})),
            output=_from_section(OutputConfig, "output", data.get("output", {})),
        )
        config.validate()
        return config

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        self.model.validate()
        self.run.validate()
        self.output.validate()
        if (self.scenario == "vlasov-classical") != self.model.is_classical:
            raise ConfigError("Scenario 'vlasov-classical' and model.kind 'classical' go together")
        try:
            spec = self.model.build_spec()
            if not self.model.is_classical:
                self.run.initial_ket(spec.realization.d)
                self.run.integral_matrices(self.model)
            else:
                self.model.initial_density()
        except ConfigError:
            raise
        except (UniformizeError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"Invalid model: {exc}") from exc

    def with_overrides(self, out_dir: Optional[str] = None, fmt: Optional[str] = None,
                       seed: Optional[int] = None) -> "ExperimentConfig":
        """Copy with command-line overrides applied."""
        output, run = self.output, self.run
        if out_dir is not None:
            output = replace(output, directory=str(out_dir))
        if fmt is not None:
            output = replace(output, format=fmt)
        if seed is not None:
            run = replace(run, seed=int(seed))
        config = replace(self, output=output, run=run)
        config.output.validate()
        return config

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def canonical_json(self) -> str:
        """Key-sorted compact JSON, the input of config_hash."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate a JSON config file.

    Raises:
        ConfigError: If the file is missing, not JSON, or invalid
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"Cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config {path} is not valid JSON: {exc}") from exc
    config = ExperimentConfig.from_dict(data)
    logger.debug("Loaded config %s (hash %s)", path, config.config_hash()[:12])
    return config
