"""Named reproductions: spectrum, weights and a certified perturbation per construction."""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from config import DEFAULT_HORIZON, DEFAULT_SIZE, logger
from operator_lab import (
    CertificateError,
    PerturbationMatrix,
    Storage,
    certificate_constant,
    random_certified_perturbation,
)
from sequence_models import Spectrum, WeightSequence


# --------------------------------------------------------------------------- generators


def make_lnln(a: float) -> tuple[Spectrum, WeightSequence]:
    """mu_n = n with omega_j = (log j)^-1/2 (log log j)^-a."""
    if a <= 0.5:
        raise ValueError(f"lnln weights need a > 1/2, got {a}")
    return Spectrum.linear(), WeightSequence.sqrtlog_loglog(a)


def make_gap_supported(a: float, values: Sequence[float]) -> tuple[Spectrum, WeightSequence]:
    """omega^2 = t_{b_m} on b_m = floor(m^a), zero elsewhere."""
    return Spectrum.linear(), WeightSequence.gap_supported(a, values)


def make_log_power(a: float) -> tuple[Spectrum, WeightSequence]:
    """mu_n = n with omega_j = (log j)^-a."""
    if a < 1:
        raise ValueError(f"log-power weights need a >= 1, got {a}")
    return Spectrum.linear(), WeightSequence.log_power(a)


def make_power_alpha(alpha: float) -> tuple[Spectrum, WeightSequence]:
    return Spectrum.linear(), WeightSequence.power(alpha)


def band_constant(bands: Mapping[int, Sequence[complex]], w: WeightSequence) -> float:
    """max over j, k of (|b^(j)_(k-1)| + |b^(j)_k|) / omega_k^2."""
    worst = 0.0
    for b in bands.values():
        mags = np.abs(np.asarray(b, dtype=complex))
        if mags.size < 2:
            continue
        pair = mags[:-1] + mags[1:]
        t = w.squares(np.arange(2, mags.size + 1))
        if np.any((t == 0) & (pair > 0)):
            return math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(t > 0, pair / t, 0.0)
        worst = max(worst, float(ratio.max()))
    return worst


def make_finite_band(bands: Mapping[int, Sequence[complex]], w: WeightSequence) -> PerturbationMatrix:
    """Tridiagonal V with V e_k = b^(1)_(k-1) e_(k-1) + b^(0)_k e_k + b^(-1)_k e_(k+1).

    The constant C = max |v_jk| / (omega_j omega_k) is folded into the weights, so the
    returned matrix carries ``w.scaled(C)``.
    """
    unknown = set(bands) - {-1, 0, 1}
    if unknown:
        raise ValueError(f"band offsets must be -1, 0 or 1, got {sorted(unknown)}")
    diag = np.asarray(bands.get(0, ()), dtype=complex)
    size = diag.size or max(len(b) for b in bands.values()) + 1
    op = np.zeros((size, size), dtype=complex)
    op[np.arange(diag.size), np.arange(diag.size)] = diag
    upper = np.asarray(bands.get(1, ()), dtype=complex)[: size - 1]
    lower = np.asarray(bands.get(-1, ()), dtype=complex)[: size - 1]
    op[np.arange(upper.size), np.arange(upper.size) + 1] = upper
    op[np.arange(lower.size) + 1, np.arange(lower.size)] = lower
    entries = op.T

    C = certificate_constant(entries, w)
    if math.isinf(C):
        omega = np.sqrt(w.squares(np.arange(1, size + 1)))
        j, k = np.argwhere((entries != 0) & (np.outer(omega, omega) == 0))[0]
        raise CertificateError(int(j) + 1, int(k) + 1, float(abs(entries[j, k])), 0.0)
    logger.info(f"Finite-band certificate constant C = {C:.6g}, band constant {band_constant(bands, w):.6g}")
    weights = w.scaled(C) if C > 0 else w
    return PerturbationMatrix(entries, weights, Storage.BANDED, 1)


def _block_s(k: np.ndarray) -> np.ndarray:
    m = np.rint(np.sqrt(k)).astype(np.int64)
    return np.where(m * m == k, np.sqrt(np.maximum(1.0 - 1.0 / k, 0.0)), 0.0)


def counterexample_block(k: int) -> tuple[tuple[float, float], float]:
    """Closed-form eigenvalues and projection norm of the k-th 2x2 block."""
    s = float(_block_s(np.array([k]))[0])
    varsigma = math.sqrt(1.0 - s * s)
    centre = 2 * k - 0.5
    return (centre - varsigma / 2, centre + varsigma / 2), 1.0 / varsigma


def make_counterexample(
    m_max: int, size: int | None = None
) -> tuple[Spectrum, WeightSequence, PerturbationMatrix]:
    """Block-diagonal V: V e_(2k-1) = -(s_k/2) e_(2k), V e_(2k) = (s_k/2) e_(2k-1)."""
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    size = 2 * m_max**2 + 2 if size is None else size
    if size < 2 * m_max**2:
        raise ValueError(f"size {size} too small for m_max = {m_max}: need >= {2 * m_max**2}")
    w = WeightSequence.counterexample()
    blocks = np.arange(1, size // 2 + 1)
    s = _block_s(blocks)
    entries = np.zeros((size, size), dtype=complex)
    entries[2 * blocks - 2, 2 * blocks - 1] = -s / 2
    entries[2 * blocks - 1, 2 * blocks - 2] = s / 2
    return Spectrum.linear(), w, PerturbationMatrix(entries, w, Storage.BANDED, 1)


# --------------------------------------------------------------------------- registry


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: Mapping[str, Any]
    size: int
    horizon: int = DEFAULT_HORIZON
    depth: int | None = None
    buffer: int | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    spec: ScenarioSpec
    spectrum: Spectrum
    weights: WeightSequence
    perturbation: PerturbationMatrix
    constants: dict[str, float] = field(default_factory=dict)
    expected: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioEntry:
    description: str
    defaults: Mapping[str, Any]
    builder: Callable[[ScenarioSpec, np.random.Generator], Scenario]


def _random_v(spec: ScenarioSpec, w: WeightSequence, rng: np.random.Generator) -> PerturbationMatrix:
    bandwidth = spec.params.get("bandwidth")
    return random_certified_perturbation(
        w, spec.size, rng, float(spec.params["amplitude"]), None if bandwidth is None else int(bandwidth)
    )


def _lnln(spec: ScenarioSpec, rng: np.random.Generator) -> Scenario:
    spectrum, w = make_lnln(float(spec.params["a"]))
    expected = {"summable": "holds", "g_decays": "inconclusive"}
    return Scenario(spec, spectrum, w, _random_v(spec, w, rng), expected=expected)


def _gap_values(a: float, size: int, count: int | None) -> list[float]:
    count = count or max(1, int(math.floor(size ** (1 / a))))
    return [1.0 / math.log(m + 2) for m in range(1, count + 1)]


def _gap(spec: ScenarioSpec, rng: np.random.Generator) -> Scenario:
    a = float(spec.params["a"])
    values = spec.params.get("values") or _gap_values(a, spec.size, spec.params.get("count"))
    spectrum, w = make_gap_supported(a, values)
    return Scenario(spec, spectrum, w, _random_v(spec, w, rng), expected={"summable": "holds"})


def _finite_band(spec: ScenarioSpec, rng: np.random.Generator) -> Scenario:
    w = WeightSequence.sqrtlog_loglog(float(spec.params["a"]))
    gap_a = float(spec.params["gap_a"])
    if gap_a > 0:
        w = WeightSequence.composite(w, WeightSequence.gap_supported(gap_a, _gap_values(gap_a, spec.size, None)))
    half = float(spec.params["scale"]) * w.squares(np.arange(1, spec.size)) / 2
    bands = {-1: half, 0: np.zeros(spec.size), 1: half}
    V = make_finite_band(bands, w)
    constants = {
        "certificate_constant": certificate_constant(V.entries, w),
        "band_constant": band_constant(bands, w),
    }
    expected = {"summable": "holds", "g_decays": "inconclusive"}
    return Scenario(spec, Spectrum.linear(), V.weights, V, constants, expected)


def _log_power(spec: ScenarioSpec, rng: np.random.Generator) -> Scenario:
    a = float(spec.params["a"])
    spectrum, w = make_log_power(a)
    expected = {"summable": "holds", "g_tilde_bounded": "holds" if a > 1 else "fails"}
    return Scenario(spec, spectrum, w, _random_v(spec, w, rng), expected=expected)


def _counterexample(spec: ScenarioSpec, rng: np.random.Generator) -> Scenario:
    spectrum, w, V = make_counterexample(int(spec.params["m_max"]), spec.size)
    return Scenario(spec, spectrum, w, V, expected={"summable": "holds", "g_decays": "fails"})


def _power_alpha(spec: ScenarioSpec, rng: np.random.Generator) -> Scenario:
    spectrum, w = make_power_alpha(float(spec.params["alpha"]))
    return Scenario(spec, spectrum, w, _random_v(spec, w, rng))


_RANDOM_V = {"amplitude": 1.0, "bandwidth": None}

REGISTRY: dict[str, ScenarioEntry] = {
    "lnln-decay": ScenarioEntry(
        "omega_j = (log j)^-1/2 (log log j)^-a on mu_n = n, random certified V",
        {"a": 1.0, **_RANDOM_V},
        _lnln,
    ),
    "gap-supported": ScenarioEntry(
        "weights t_m = 1/log(m+2) on b_m = floor(m^a), random certified V",
        {"a": 2.0, "count": None, "values": None, **_RANDOM_V},
        _gap,
    ),
    "finite-band": ScenarioEntry(
        "tridiagonal V with off-diagonal bands scale * omega_k^2 / 2",
        {"a": 1.0, "gap_a": 0.0, "scale": 1.0},
        _finite_band,
    ),
    "log-power-fast": ScenarioEntry(
        "omega_j = (log j)^-a on mu_n = n, random certified V",
        {"a": 2.0, **_RANDOM_V},
        _log_power,
    ),
    "counterexample": ScenarioEntry(
        "2x2 blocks at k = m^2 with projection norms m",
        {"m_max": 10},
        _counterexample,
    ),
    "power-alpha": ScenarioEntry(
        "omega_j = j^-alpha on mu_n = n, random certified V",
        {"alpha": 1.0, **_RANDOM_V},
        _power_alpha,
    ),
}


def scenario_names() -> list[str]:
    return sorted(REGISTRY)


def default_size(name: str, params: Mapping[str, Any]) -> int:
    if name == "counterexample":
        return 2 * int(params["m_max"]) ** 2 + 2
    return DEFAULT_SIZE


def build_scenario(
    name: str,
    overrides: Mapping[str, Any] | None = None,
    rng: np.random.Generator | None = None,
    size: int | None = None,
    horizon: int = DEFAULT_HORIZON,
) -> Scenario:
    """Build a registered scenario with parameter overrides."""
    if name not in REGISTRY:
        raise ValueError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")
    entry = REGISTRY[name]
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(entry.defaults)
    if unknown:
        raise ValueError(f"unknown parameters for scenario {name}: {sorted(unknown)}")
    params = {**entry.defaults, **overrides}
    spec = ScenarioSpec(name, params, size or default_size(name, params), horizon)
    logger.info(f"Building scenario {name} with {params} at size {spec.size}")
    return entry.builder(spec, rng if rng is not None else np.random.default_rng())
