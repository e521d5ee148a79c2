"""Experiment configuration with explicit units in every key.

Configs are plain JSON. Unknown keys are rejected, missing keys take their
defaults, and ``from_dict(c.to_dict()) == c`` holds for every valid config.
"""
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
import json
import math
import os
import typing

from .noise import NoiseModel
from .tomography import GridSpec


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class Hamiltonian:
    chi_qs_over_2pi_mhz: float = 1.43
    # recorded for completeness; the simulation works in the rotating frame
    omega_q_over_2pi_ghz: float = 5.7651
    omega_s_over_2pi_ghz: float = 7.2164
    omega_r_over_2pi_ghz: float = 8.1740
    k_q_over_2pi_mhz: float = 240.0
    k_s_over_2pi_khz: float = 1.5
    k_r_over_2pi_khz: float = 2.0
    chi_qr_over_2pi_mhz: float = 1.0
    chi_rs_over_2pi_khz: float = 1.7


@dataclass(frozen=True)
class Coherence:
    tau_s_us: float = 55.0
    t1_us: float = 10.0
    t2_us: float = 10.0
    tau_readout_ns: float = 30.0


@dataclass(frozen=True)
class Detectors:
    p_gg: float = 0.985
    p_ee: float = 0.975
    f_c: float = 0.955
    p_c: typing.Optional[float] = None
    tau_wait_ns: float = 740.0
    t_eff_us: float = 1.24
    init_success: float = 0.99
    rotation_error: float = 0.042


@dataclass(frozen=True)
class Channels:
    cavity_loss: bool = True
    qubit_decay: bool = True
    readout: bool = True
    feedback: bool = True
    init: bool = True
    rotation_error: bool = True
    dephasing: bool = False
    ramsey_decay: bool = False


@dataclass(frozen=True)
class Grid:
    alpha_max: float = 3.4
    step: float = 0.085


@dataclass(frozen=True)
class Truncation:
    n_sim: int = 40
    n_mle: int = 12


@dataclass(frozen=True)
class ExperimentConfig:
    hamiltonian: Hamiltonian = field(default_factory=Hamiltonian)
    coherence: Coherence = field(default_factory=Coherence)
    detectors: Detectors = field(default_factory=Detectors)
    channels: Channels = field(default_factory=Channels)
    grid: Grid = field(default_factory=Grid)
    truncation: Truncation = field(default_factory=Truncation)
    shots_per_setting: int = 4000
    model_visibility: float = 0.85
    master_seed: int = 0

    def __post_init__(self):
        # build the derived objects once so invalid values fail early
        try:
            self.noise_model()
            self.grid_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.truncation.n_sim < 2 or self.truncation.n_mle < 2:
            raise ConfigError("truncations must be >= 2")
        if self.shots_per_setting < 1:
            raise ConfigError("shots_per_setting must be >= 1")
        if self.hamiltonian.chi_qs_over_2pi_mhz <= 0:
            raise ConfigError("chi_qs_over_2pi_mhz must be > 0")

    @property
    def chi(self):
        """Dispersive shift in rad/s."""
        return 2 * math.pi * self.hamiltonian.chi_qs_over_2pi_mhz * 1e6

    @property
    def loss_gamma(self):
        """``t_eff / tau_s`` used by the analytic model curves."""
        return self.detectors.t_eff_us / self.coherence.tau_s_us

    def noise_model(self):
        d, c, ch = self.detectors, self.coherence, self.channels
        return NoiseModel(
            tau_s=c.tau_s_us * 1e-6, t1=c.t1_us * 1e-6, t2=c.t2_us * 1e-6,
            p_gg=d.p_gg, p_ee=d.p_ee, f_c=d.f_c, tau_wait=d.tau_wait_ns * 1e-9, p_c=d.p_c,
            t_eff=d.t_eff_us * 1e-6, init_success=d.init_success,
            rotation_error=d.rotation_error,
            **{f"{f.name}_enabled": getattr(ch, f.name) for f in fields(ch)})

    def grid_spec(self):
        return GridSpec(self.grid.alpha_max, self.grid.step)

    def to_dict(self):
        return asdict(self)

    def dumps(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data, "config")

    @classmethod
    def loads(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for name, value in data.items():
        kwargs[name] = _coerce(hints[name], value, f"{where}.{name}")
    return cls(**kwargs)


def _coerce(tp, value, where):
    if is_dataclass(tp):
        return _build(tp, value, where)
    if typing.get_origin(tp) is typing.Union:
        if value is None:
            return None
        tp = next(a for a in typing.get_args(tp) if a is not type(None))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    raise ConfigError(f"{where}: unsupported type")


def _ideal():
    off = Channels(**{f.name: False for f in fields(Channels)})
    return ExperimentConfig(channels=off)


PRESETS = {
    "paper": ExperimentConfig,
    "paper_quoted_pc": lambda: ExperimentConfig(detectors=Detectors(p_c=0.06)),
    "ideal": _ideal,
}


def load_config(source=None):
    """Config from a preset name, a JSON file path, or the default ``paper`` preset."""
    if source is None:
        return ExperimentConfig()
    if source in PRESETS:
        return PRESETS[source]()
    if not os.path.exists(source):
        raise ConfigError(f"no preset or file named {source!r}")
    with open(source, encoding="utf-8") as fh:
        return ExperimentConfig.loads(fh.read())


def with_overrides(cfg, seed=None, shots=None):
    if seed is not None:
        cfg = replace(cfg, master_seed=seed)
    if shots is not None:
        cfg = replace(cfg, shots_per_setting=shots)
    return cfg
