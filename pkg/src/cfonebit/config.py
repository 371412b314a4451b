"""Configuration objects for the network, the solver, and experiment plans.

Everything an experiment run depends on lives in one of the three frozen
dataclasses below, so a run is fully described by an ``ExperimentPlan`` plus
nothing else.  A flat key/value view of the plan (``plan_to_flat`` /
``plan_from_flat``) backs the JSON config files and the CLI.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Any


class ConfigError(ValueError):
    """Raised on invalid configuration; carries the offending field name."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class Precoder(str, enum.Enum):
    """Precoder identifiers used in plans, result tables, and CSV output.

    GREEN is the sparsity-regularized one-bit precoder.  The *_ALIGNED
    variants copy GREEN's per-symbol antenna mask; the *_ACR variants
    deactivate a uniformly random antenna subset of the same size.
    """

    GREEN = "green"
    RZF1 = "rzf1"
    SQUID = "squid"
    RZF1_ALIGNED = "rzf1_aligned"
    SQUID_ALIGNED = "squid_aligned"
    RZF1_ACR = "rzf1_acr"
    SQUID_ACR = "squid_acr"

    @property
    def is_aligned(self) -> bool:
        return self.value.endswith("_aligned")

    @property
    def is_acr(self) -> bool:
        return self.value.endswith("_acr")

    @property
    def needs_green_mask(self) -> bool:
        """True when running this precoder requires GREEN's per-symbol mask."""
        return self is Precoder.GREEN or self.is_aligned or self.is_acr

    @property
    def family(self) -> str:
        """Base family: 'green', 'rzf1' or 'squid'."""
        v = self.value
        for suffix in ("_aligned", "_acr"):
            if v.endswith(suffix):
                return v[: -len(suffix)]
        return v


# BaselineKind per the external contract: every non-GREEN precoder.
BASELINE_KINDS = tuple(p for p in Precoder if p is not Precoder.GREEN)


@dataclass(frozen=True)
class NetworkConfig:
    """Cell-free network geometry, propagation, and power parameters.

    Defaults reproduce the standard simulation setup: a 1 km x 1 km
    wrap-around square with 100 single-antenna APs jointly serving 60
    single-antenna UEs over 20 MHz.
    """

    area_side_m: float = 1000.0
    num_aps: int = 100
    antennas_per_ap: int = 1
    num_ues: int = 60
    bandwidth_hz: float = 20e6
    height_diff_m: float = 10.0          # fixed AP-UE height difference
    pathloss_exponent: float = 3.67
    gain_at_1km_db: float = -140.6
    shadow_std_db: float = 4.0
    angular_std_deg: float = 15.0        # azimuth and elevation spread (ULA model)
    downlink_power_w: float = 1.0        # per-AP power budget P
    noise_figure_db: float = 7.0
    # Optional override of the receiver noise power in watts.  None derives
    # it from bandwidth and noise figure; 0.0 gives a noiseless link.
    noise_variance_w: float | None = None
    seed: int = 0

    @property
    def num_antennas(self) -> int:
        """Total antenna count M = L*N (always derived, never stored)."""
        return self.num_aps * self.antennas_per_ap

    def validate(self) -> None:
        if self.area_side_m <= 0:
            raise ConfigError("area_side_m", "must be > 0")
        if self.num_aps < 1:
            raise ConfigError("num_aps", "must be >= 1")
        if self.antennas_per_ap < 1:
            raise ConfigError("antennas_per_ap", "must be >= 1")
        if self.num_ues < 1:
            raise ConfigError("num_ues", "must be >= 1")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz", "must be > 0")
        if self.height_diff_m < 0:
            raise ConfigError("height_diff_m", "must be >= 0")
        if self.pathloss_exponent <= 0:
            raise ConfigError("pathloss_exponent", "must be > 0")
        if self.shadow_std_db < 0:
            raise ConfigError("shadow_std_db", "must be >= 0")
        if self.angular_std_deg < 0:
            raise ConfigError("angular_std_deg", "must be >= 0")
        if self.downlink_power_w <= 0:
            raise ConfigError("downlink_power_w", "must be > 0")
        if self.noise_variance_w is not None and self.noise_variance_w < 0:
            raise ConfigError("noise_variance_w", "must be >= 0 when given")
        if not isinstance(self.seed, int):
            raise ConfigError("seed", "must be an integer")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the three-operator splitting iteration.

    ``gamma`` is the proximal step size.  When None it is derived per
    channel as ``gamma_scale / (2 * sigma_max^2(H_r))``; the classical
    conservative choice is gamma_scale = 0.1.  ``psi`` is the relaxation
    factor of the correction step; stability requires
    psi < 2 - gamma * L / 2 with L = 2 sigma_max^2(H_r).

    ``tolerance`` is the stopping threshold on ||b - a||_2; None resolves
    to 1e-6 * sqrt(2M) at solve time.  ``kappa`` weights the squared
    infinity-norm term and equals 2*N*K*sigma^2/P when derived from a
    network (see :func:`cfonebit.precoder.kappa_for`).
    """

    lam: float = 0.0
    gamma: float | None = None
    gamma_scale: float = 0.1
    psi: float = 1.0
    max_iters: int = 200
    tolerance: float | None = None
    kappa: float = 0.0

    def validate(self) -> None:
        if self.lam < 0:
            raise ConfigError("lam", "must be >= 0")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError("gamma", "must be > 0 when given")
        if self.gamma_scale <= 0:
            raise ConfigError("gamma_scale", "must be > 0")
        if not (0 < self.psi < 2):
            raise ConfigError("psi", "must lie in (0, 2)")
        if self.max_iters < 1:
            raise ConfigError("max_iters", "must be >= 1")
        if self.tolerance is not None and self.tolerance < 0:
            raise ConfigError("tolerance", "must be >= 0 when given")
        if self.kappa < 0:
            raise ConfigError("kappa", "must be >= 0")

    def resolved_tolerance(self, two_m: int) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return 1e-6 * math.sqrt(two_m)

    def resolved_gamma(self, smax_sq: float) -> float:
        if self.gamma is not None:
            return self.gamma
        return self.gamma_scale / (2.0 * smax_sq)

    def with_lam(self, lam: float) -> "SolverConfig":
        return dataclasses.replace(self, lam=lam)


DEFAULT_LAMBDAS = (1.0, 10.0, 15.0, 20.0, 25.0)

ALL_PRECODERS = tuple(Precoder)


@dataclass(frozen=True)
class ExperimentPlan:
    """Full description of a Monte Carlo BER experiment.

    The plan (and nothing else) determines every random draw of the run:
    channels, payload bits, receiver noise, and random deactivation masks
    all derive from ``master_seed``, so results are reproducible for any
    worker count.
    """

    network: NetworkConfig = NetworkConfig()
    solver: SolverConfig = SolverConfig()
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    bits_per_ue: int = 1_000_000
    num_setups: int = 10
    precoders: tuple[Precoder, ...] = ALL_PRECODERS
    master_seed: int = 0
    tau_off: float = 1e-3        # relative group-norm threshold for shutdown
    rzf_reg_scale: float = 1.0   # scales the K*sigma^2/P ridge of RZF
    batch_size: int = 512        # symbols per solver batch (fixed partition)

    def validate(self) -> None:
        self.network.validate()
        self.solver.validate()
        if len(self.lambdas) == 0:
            raise ConfigError("lambdas", "must be a nonempty list")
        if any(l < 0 for l in self.lambdas):
            raise ConfigError("lambdas", "entries must be >= 0")
        if self.bits_per_ue < 2 or self.bits_per_ue % 2 != 0:
            raise ConfigError("bits_per_ue", "must be even and >= 2 (2 bits per QPSK symbol)")
        if self.num_setups < 1:
            raise ConfigError("num_setups", "must be >= 1")
        if len(self.precoders) == 0:
            raise ConfigError("precoders", "must be a nonempty list")
        if len(set(self.precoders)) != len(self.precoders):
            raise ConfigError("precoders", "contains duplicates")
        if not isinstance(self.master_seed, int):
            raise ConfigError("seed", "must be an integer")
        if not (0 <= self.tau_off < 1):
            raise ConfigError("tau_off", "must lie in [0, 1)")
        if self.rzf_reg_scale <= 0:
            raise ConfigError("rzf_reg_scale", "must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")

    @property
    def symbols_per_setup(self) -> int:
        return self.bits_per_ue // 2


# --------------------------------------------------------------------------
# Flat key/value schema (config files, CLI overrides, manifest round-trip).
#
# Each entry: flat key -> (section, dataclass field, parser).  ``seed`` is
# the single user-facing seed and maps to ExperimentPlan.master_seed (the
# per-setup channel seeds are derived from it inside the harness).
# --------------------------------------------------------------------------

def _as_int(v: Any) -> int:
    if isinstance(v, bool) or (not isinstance(v, int) and not (isinstance(v, float) and float(v).is_integer())):
        raise ValueError("expected an integer")
    return int(v)


def _as_float(v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError("expected a number")
    return float(v)


def _as_opt_float(v: Any) -> float | None:
    return None if v is None else _as_float(v)


def _as_float_list(v: Any) -> tuple[float, ...]:
    if not isinstance(v, (list, tuple)) or len(v) == 0:
        raise ValueError("expected a nonempty list of numbers")
    return tuple(_as_float(x) for x in v)


def _as_precoder_list(v: Any) -> tuple[Precoder, ...]:
    if not isinstance(v, (list, tuple)) or len(v) == 0:
        raise ValueError("expected a nonempty list of precoder names")
    out = []
    for x in v:
        try:
            out.append(Precoder(str(x).strip().lower()))
        except ValueError:
            valid = ", ".join(p.value for p in Precoder)
            raise ValueError(f"unknown precoder {x!r} (valid: {valid})")
    return tuple(out)


_NETWORK_KEYS = {
    "area_side_m": _as_float,
    "num_aps": _as_int,
    "antennas_per_ap": _as_int,
    "num_ues": _as_int,
    "bandwidth_hz": _as_float,
    "height_diff_m": _as_float,
    "pathloss_exponent": _as_float,
    "gain_at_1km_db": _as_float,
    "shadow_std_db": _as_float,
    "angular_std_deg": _as_float,
    "downlink_power_w": _as_float,
    "noise_figure_db": _as_float,
    "noise_variance_w": _as_opt_float,
}

_SOLVER_KEYS = {
    "gamma": _as_opt_float,
    "gamma_scale": _as_float,
    "psi": _as_float,
    "max_iters": _as_int,
    "tolerance": _as_opt_float,
}

_PLAN_KEYS = {
    "lambdas": _as_float_list,
    "bits_per_ue": _as_int,
    "num_setups": _as_int,
    "precoders": _as_precoder_list,
    "seed": _as_int,
    "tau_off": _as_float,
    "rzf_reg_scale": _as_float,
    "batch_size": _as_int,
}

FLAT_KEYS = tuple(list(_NETWORK_KEYS) + list(_SOLVER_KEYS) + list(_PLAN_KEYS))


def plan_to_flat(plan: ExperimentPlan) -> dict[str, Any]:
    """Serialize a plan to the flat key/value schema (JSON-friendly)."""
    out: dict[str, Any] = {}
    for key in _NETWORK_KEYS:
        out[key] = getattr(plan.network, key)
    for key in _SOLVER_KEYS:
        out[key] = getattr(plan.solver, key)
    out["lambdas"] = list(plan.lambdas)
    out["bits_per_ue"] = plan.bits_per_ue
    out["num_setups"] = plan.num_setups
    out["precoders"] = [p.value for p in plan.precoders]
    out["seed"] = plan.master_seed
    out["tau_off"] = plan.tau_off
    out["rzf_reg_scale"] = plan.rzf_reg_scale
    out["batch_size"] = plan.batch_size
    return out


def plan_from_flat(flat: dict[str, Any]) -> ExperimentPlan:
    """Build a validated plan from flat key/value pairs.

    Unknown keys are rejected; values are type-checked per field.  Partial
    dicts are fine — missing keys keep their defaults.
    """
    unknown = sorted(set(flat) - set(FLAT_KEYS))
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")

    def parse(key: str, parser) -> Any:
        try:
            return parser(flat[key])
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None

    net_kw = {k: parse(k, p) for k, p in _NETWORK_KEYS.items() if k in flat}
    sol_kw = {k: parse(k, p) for k, p in _SOLVER_KEYS.items() if k in flat}
    plan_kw: dict[str, Any] = {}
    for k, p in _PLAN_KEYS.items():
        if k not in flat:
            continue
        val = parse(k, p)
        plan_kw["master_seed" if k == "seed" else k] = val

    if "master_seed" in plan_kw:
        # The network seed mirrors the master seed; per-setup seeds are
        # derived from it by the harness.
        net_kw.setdefault("seed", plan_kw["master_seed"])

    plan = ExperimentPlan(
        network=NetworkConfig(**net_kw),
        solver=SolverConfig(**sol_kw),
        **plan_kw,
    )
    plan.validate()
    return plan
