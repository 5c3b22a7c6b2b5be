"""Sequence-level criteria for perturbed diagonal operators.

Evaluates, with enclosures, the weighted sums that control localization and the
Riesz-basis property: the G transform and its suprema sigma_N, rho_N, k_N, the
Schur-test bounds on the matrices M and M', tau_N, the double sum G-tilde of the
simplified route, and the verdicts built from them.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import fftconvolve

from config import (
    DECAY_WINDOWS,
    DEFAULT_DEPTH_FACTOR,
    DEFAULT_EPSILON,
    DEFAULT_GTILDE_K,
    DEFAULT_GTILDE_LOG2,
    DEFAULT_GTILDE_N1,
    DEFAULT_HORIZON,
    DEFAULT_SCHATTEN_P,
    GROWTH_EXPONENT_MAX,
    MAX_WORKERS,
    POWER_ITERATION_MAX,
    POWER_ITERATION_TOL,
    logger,
)
from performance import timeit
from sequence_models import (
    Spectrum,
    TailBound,
    TailMethod,
    WeightKind,
    WeightSequence,
    gaps,
    half_gaps,
    round_up,
    schatten_sum,
    weaker_method,
    weighted_tail,
)

_BLOCK = 1 << 22


class ConvergenceError(RuntimeError):
    """Power iteration reached its iteration cap."""


class VerdictStatus(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    detail: str
    witness: tuple[tuple[int, float], ...] = ()
    note: str = ""


@dataclass(frozen=True)
class SupEnclosure:
    """Enclosure of a supremum over N <= n <= horizon.

    ``at_boundary`` is set when the upper ends peak at the horizon itself.
    """

    bound: TailBound
    argmax: int
    at_boundary: bool

    @property
    def upper(self) -> float:
        return self.bound.upper


@dataclass(frozen=True)
class SchurBounds:
    N: int
    k_N: int
    bound_m: float
    bound_m_prime: float
    rho_N: TailBound
    sigma_N: SupEnclosure
    sigma_kN: SupEnclosure

    @property
    def tau_N(self) -> float:
        s = self.sigma_N.upper
        return max(self.bound_m, self.bound_m_prime, s, 2 * s)


# --------------------------------------------------------------------------- sums


def _effective_depth(spec: Spectrum, depth: int) -> int:
    return spec.length if spec.length is not None else depth


def _far_sums_direct(t: np.ndarray, mus: np.ndarray, n_idx: np.ndarray) -> np.ndarray:
    """sum_{j <= len(t), j != n} t_j / |mu_n - mu_j| for every n in n_idx."""
    D = t.size
    rows = max(1, _BLOCK // D)
    cols = min(D, _BLOCK)

    def row_block(chunk: np.ndarray) -> np.ndarray:
        acc = np.zeros(chunk.size)
        centre = mus[chunk - 1][:, None]
        for lo in range(0, D, cols):
            hi = min(D, lo + cols)
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = t[None, lo:hi] / np.abs(centre - mus[None, lo:hi])
            own = (chunk - 1 >= lo) & (chunk - 1 < hi)
            terms[np.nonzero(own)[0], chunk[own] - 1 - lo] = 0.0
            acc += terms.sum(axis=1)
        return acc

    blocks = [n_idx[i : i + rows] for i in range(0, n_idx.size, rows)]
    if len(blocks) == 1:
        return row_block(blocks[0])
    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as executor:
        return np.concatenate(list(executor.map(row_block, blocks)))


def _far_sums_affine(t: np.ndarray, slope: float, n_max: int) -> tuple[np.ndarray, float]:
    """Convolution form of the far sums for mu_n = c n + d, with a rounding margin."""
    D = t.size
    offsets = np.arange(-(D - 1), n_max)
    kernel = np.zeros(offsets.size)
    nz = offsets != 0
    kernel[nz] = 1.0 / np.abs(offsets[nz])
    conv = fftconvolve(t, kernel)[D - 1 : D - 1 + n_max] / slope
    length = conv.size + D
    margin = 8 * np.finfo(float).eps * math.log2(length) * np.linalg.norm(t) * np.linalg.norm(kernel) / slope
    return np.maximum(conv, 0.0), float(margin)


@dataclass(frozen=True, eq=False)
class GTable:
    """Per-index enclosure arrays for G(n), n = 1..horizon (index 0 is n = 1)."""

    value: np.ndarray
    tail_lower: np.ndarray
    tail_upper: np.ndarray
    local: np.ndarray
    method: TailMethod

    @property
    def upper(self) -> np.ndarray:
        return self.value + self.tail_upper

    @property
    def lower(self) -> np.ndarray:
        return self.value + self.tail_lower


def _tail_factors(spec: Spectrum, mus_n: np.ndarray, depth: int) -> np.ndarray:
    # 1 / (1 - mu_n / mu_{D+1}) bounds mu_j / (mu_j - mu_n) for every j > D.
    if spec.length is not None:
        return np.ones_like(mus_n)
    mu_next = float(spec.at([depth + 1])[0])
    if not np.all(mus_n < mu_next):
        raise ValueError(f"depth {depth} too small: mu_(depth+1) must exceed every sampled mu_n")
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 - mus_n / mu_next)


@timeit
def build_g_table(spec: Spectrum, w: WeightSequence, horizon: int, depth: int) -> GTable:
    """Enclosures of G(n) for every n up to the horizon."""
    D = _effective_depth(spec, depth)
    if spec.length is None and D <= horizon:
        raise ValueError(f"depth {D} must exceed horizon {horizon}")
    idx = np.arange(1, D + 1)
    t = w.squares(idx)
    mus = spec.at(idx)
    r = half_gaps(spec, horizon)
    n_idx = np.arange(1, horizon + 1)
    margin = 0.0
    if not np.any(t):
        far = np.zeros(horizon)
    elif spec.slope is not None:
        far, margin = _far_sums_affine(t, spec.slope, horizon)
    else:
        far = _far_sums_direct(t, mus, n_idx)
    local = t[:horizon] / r
    tail = weighted_tail(spec, w, D)
    factors = _tail_factors(spec, mus[:horizon], D)
    with np.errstate(invalid="ignore"):
        tail_upper = tail.tail_upper * factors + margin
    tail_upper = np.where(np.isnan(tail_upper), math.inf, tail_upper)
    tail_lower = np.full(horizon, tail.tail_lower - margin)
    return GTable(far + local, tail_lower, tail_upper, local, tail.method)


def g_transform(spec: Spectrum, w: WeightSequence, n: int, depth: int) -> TailBound:
    """Enclosure of G(n) = sum_{j != n} w_j^2 / |mu_n - mu_j| + w_n^2 / r_n."""
    if n < 1 or depth < n:
        raise ValueError(f"need n >= 1 and depth >= n, got n={n}, depth={depth}")
    D = _effective_depth(spec, depth)
    idx = np.arange(1, D + 1)
    t = w.squares(idx)
    mus = spec.at(idx)
    far = float(_far_sums_direct(t, mus, np.array([n]))[0]) if np.any(t) else 0.0
    local = float(w.squares([n])[0] / gaps(spec, n).r)
    tail = weighted_tail(spec, w, D)
    factor = float(_tail_factors(spec, mus[n - 1 : n], D)[0])
    return TailBound(far + local, tail.tail_upper * factor, tail.method, tail.tail_lower)


def g_samples(spec: Spectrum, w: WeightSequence, n_values: Sequence[int], depth: int) -> dict[int, TailBound]:
    """G(n) at scattered sample points, evaluated concurrently."""
    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as executor:
        results = executor.map(lambda n: g_transform(spec, w, int(n), depth), n_values)
        return dict(zip((int(n) for n in n_values), results))


def k_N(spec: Spectrum, N: int) -> int | None:
    """Largest k <= N with mu_N - r_N >= 2 mu_k, or None."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    mus = spec.upto(N)
    threshold = mus[-1] - gaps(spec, N).r
    count = int(np.count_nonzero(2.0 * mus <= threshold))
    return count or None


# --------------------------------------------------------------------------- tables


class CriteriaTables:
    """All per-index criterion quantities for one (spectrum, weights, horizon, depth)."""

    def __init__(self, spec: Spectrum, w: WeightSequence, horizon: int, depth: int):
        if horizon < 2:
            raise ValueError(f"horizon must be >= 2, got {horizon}")
        self.spec = spec
        self.weights = w
        self.horizon = horizon
        self.depth = _effective_depth(spec, depth)
        self.table = build_g_table(spec, w, horizon, self.depth)

        idx = np.arange(1, self.depth + 1)
        with np.errstate(over="ignore"):
            ratios = w.squares(idx) / spec.at(idx)
        self._rho_suffix = np.concatenate([np.cumsum(ratios[::-1])[::-1], [0.0]])
        self._rho_tail = weighted_tail(spec, w, self.depth)

        mus = spec.upto(horizon)
        r = half_gaps(spec, horizon)
        self._k = np.searchsorted(2.0 * mus, mus - r, side="right")
        self._sup_upper = np.maximum.accumulate(self.table.upper[::-1])[::-1]
        if horizon > 4 * self.depth:
            logger.warning(f"horizon {horizon} is large compared with depth {self.depth}")

    def g(self, n: int) -> TailBound:
        self._check_index(n, lowest=1)
        i = n - 1
        t = self.table
        return TailBound(
            float(t.value[i]), float(t.tail_upper[i]), t.method, float(t.tail_lower[i])
        )

    def sigma(self, N: int) -> SupEnclosure:
        """Enclosure of sup_{N <= n <= horizon} G(n)."""
        self._check_index(N, lowest=1)
        t = self.table
        window = slice(N - 1, self.horizon)
        upper = t.upper[window]
        argmax = int(np.argmax(upper)) + N
        value = float(t.value[window].max())
        bound = TailBound(
            value,
            float(upper.max()) - value,
            t.method,
            float(t.lower[window].max()) - value,
        )
        at_boundary = argmax == self.horizon and N < self.horizon
        if at_boundary:
            logger.warning(f"sigma_{N} is attained at the horizon {self.horizon}")
        return SupEnclosure(bound, argmax, at_boundary)

    def rho(self, N: int) -> TailBound:
        """Enclosure of rho_N = sum_{n >= N} w_n^2 / mu_n."""
        if N < 1:
            raise ValueError(f"N must be >= 1, got {N}")
        value = float(self._rho_suffix[min(N, self.depth + 1) - 1])
        tail = self._rho_tail
        return TailBound(value, tail.tail_upper, tail.method, tail.tail_lower)

    def k_N(self, N: int) -> int | None:
        self._check_index(N, lowest=2)
        k = int(self._k[N - 1])
        return k or None

    def schur(self, N: int) -> SchurBounds:
        k = self.k_N(N)
        if k is None:
            raise ValueError(f"k_N does not exist for N={N}")
        sigma_n, sigma_k, rho_n = self.sigma(N), self.sigma(k), self.rho(N)
        bound_m = math.sqrt(sigma_n.upper * max(2 * rho_n.upper, sigma_k.upper))
        return SchurBounds(N, k, bound_m, 2 * bound_m, rho_n, sigma_n, sigma_k)

    def tau(self, N: int) -> float:
        return self.schur(N).tau_N

    def epsilon_index(self, epsilon: float) -> int | None:
        """Smallest N <= horizon/2 from which every upper end stays below epsilon."""
        ok = np.nonzero(self._sup_upper[1 : self.horizon // 2] <= epsilon)[0]
        return int(ok[0]) + 2 if ok.size else None

    def certified_indices(self) -> tuple[int | None, int | None]:
        """Smallest N with 2 sigma_N <= 1/2 and smallest N with tau_N <= 1/4."""
        sup = self._sup_upper
        N = np.arange(2, self.horizon + 1)
        s_n = sup[N - 1]
        hits = np.nonzero(2 * s_n <= 0.5)[0]
        n0 = int(N[hits[0]]) if hits.size else None

        k = self._k[N - 1]
        valid = k >= 1
        rho_upper = self._rho_suffix[np.minimum(N, self.depth + 1) - 1] + self._rho_tail.tail_upper
        s_k = np.where(valid, sup[np.maximum(k, 1) - 1], math.inf)
        with np.errstate(invalid="ignore"):
            bound_m = np.sqrt(s_n * np.maximum(2 * rho_upper, s_k))
        tau = np.maximum(2 * bound_m, 2 * s_n)
        hits = np.nonzero(valid & (tau <= 0.25))[0]
        n_star = int(N[hits[0]]) if hits.size else None
        return n0, n_star

    def decay_witness(self, epsilon: float) -> tuple[tuple[int, float], ...] | None:
        """Local-term maxima w_n^2/r_n over the last dyadic windows, if they do not decay."""
        local = self.table.local
        windows = []
        i = 1
        while (1 << (i + 1)) - 1 <= self.horizon:
            windows.append((1 << i, 1 << (i + 1)))
            i += 1
        windows = windows[-DECAY_WINDOWS:]
        if len(windows) < DECAY_WINDOWS:
            return None
        witness = []
        for lo, hi in windows:
            seg = local[lo - 1 : hi - 1]
            last = seg.size - 1 - int(np.argmax(seg[::-1]))
            witness.append((lo + last, float(seg[last])))
        values = [v for _, v in witness]
        if all(v > epsilon for v in values) and all(b >= a for a, b in zip(values, values[1:])):
            return tuple(witness)
        return None

    def _check_index(self, n: int, lowest: int) -> None:
        if not lowest <= n <= self.horizon:
            raise ValueError(f"index {n} outside [{lowest}, {self.horizon}]")


@lru_cache(maxsize=4)
def criteria_tables(spec: Spectrum, w: WeightSequence, horizon: int, depth: int) -> CriteriaTables:
    """Memoised CriteriaTables."""
    return CriteriaTables(spec, w, horizon, depth)


def sigma_N(spec: Spectrum, w: WeightSequence, N: int, n_horizon: int, depth: int) -> SupEnclosure:
    """Enclosure of sigma_N = sup_{N <= n <= n_horizon} G(n)."""
    if N < 2 or n_horizon < N:
        raise ValueError(f"need N >= 2 and n_horizon >= N, got N={N}, n_horizon={n_horizon}")
    return criteria_tables(spec, w, n_horizon, depth).sigma(N)


def schur_bounds(
    spec: Spectrum, w: WeightSequence, N: int, depth: int, horizon: int | None = None
) -> SchurBounds:
    """Schur-test bounds on ||M|| and ||M'|| at index N."""
    horizon = horizon or max(2 * N, min(depth - 1, DEFAULT_HORIZON))
    return criteria_tables(spec, w, horizon, depth).schur(N)


def tau_N(spec: Spectrum, w: WeightSequence, N: int, horizon: int, depth: int) -> float:
    """max of the Schur bounds, sigma_N and 2 sigma_N."""
    return criteria_tables(spec, w, horizon, depth).tau(N)


# --------------------------------------------------------------------------- samples


def sigma_prime_sample(spec: Spectrum, w: WeightSequence, z: complex, depth: int) -> TailBound:
    """Enclosure of sum_j w_j^2 / |z - mu_j| at one point z."""
    z = complex(z)
    D = _effective_depth(spec, depth)
    idx = np.arange(1, D + 1)
    dist = np.abs(z - spec.at(idx))
    if np.any(dist == 0):
        raise ValueError(f"z={z} lies on the spectrum")
    value = float(np.sum(w.squares(idx) / dist))
    tail = weighted_tail(spec, w, D)
    if spec.length is not None:
        return TailBound(value, tail.tail_upper, tail.method, tail.tail_lower)
    mu_next = float(spec.at([D + 1])[0])
    if z.real >= mu_next:
        raise ValueError(f"depth {D} too small for Re z = {z.real}")
    up = 1.0 / (1.0 - max(z.real, 0.0) / mu_next)
    down = 1.0 / (1.0 + abs(z) / mu_next)
    return TailBound(value, tail.tail_upper * up, tail.method, tail.tail_lower * down)


def relative_form_bound(spec: Spectrum, w: WeightSequence, z0: float, depth: int) -> TailBound:
    """Enclosure of sum_j w_j^2 / (mu_j + z0)."""
    if z0 < 0:
        raise ValueError(f"z0 must be nonnegative, got {z0}")
    D = _effective_depth(spec, depth)
    idx = np.arange(1, D + 1)
    mus = spec.at(idx)
    value = float(np.sum(w.squares(idx) / (mus + z0)))
    tail = weighted_tail(spec, w, D)
    if spec.length is not None:
        return TailBound(value, tail.tail_upper, tail.method, tail.tail_lower)
    mu_next = float(spec.at([D + 1])[0])
    return TailBound(value, tail.tail_upper, tail.method, tail.tail_lower / (1.0 + z0 / mu_next))


def _strip_bound(spec: Spectrum, w: WeightSequence, left: float, right: float, h: float, depth: int) -> float:
    # Upper bound of sum_j w_j^2/|z - mu_j| over left <= Re z <= right, |Im z| >= h.
    D = _effective_depth(spec, depth)
    idx = np.arange(1, D + 1)
    mus = spec.at(idx)
    gap = np.where(mus > right, mus - right, np.where(mus < left, left - mus, 0.0))
    partial = float(np.sum(w.squares(idx) / np.sqrt(gap**2 + h**2)))
    if spec.length is not None:
        return partial
    mu_next = float(spec.at([D + 1])[0])
    tail = weighted_tail(spec, w, D).tail_upper / (1.0 - max(right, 0.0) / mu_next)
    return partial + tail


def box_parameters(
    spec: Spectrum, w: WeightSequence, N0: int, depth: int, target: float = 0.5
) -> tuple[float, float]:
    """Doubling search for box sizes h1, h2 keeping the weighted sums below target.

    h1 makes sum w_j^2/(mu_j + h1) <= target (left of the box); h2 does the same
    for the strip bound above and below the box.
    """
    h1 = 1.0
    while relative_form_bound(spec, w, h1, depth).upper > target:
        h1 *= 2
        if h1 > 2.0**60:
            raise ValueError("no admissible h1: tail enclosure exceeds the target")
    right = float(spec.at([N0])[0] + gaps(spec, N0).r)
    h2 = 1.0
    while _strip_bound(spec, w, -h1, right, h2, depth) > target:
        h2 *= 2
        if h2 > 2.0**60:
            raise ValueError("no admissible h2: tail enclosure exceeds the target")
    logger.debug(f"Box parameters for N0={N0}: h1={h1}, h2={h2}")
    return h1, h2


# --------------------------------------------------------------------------- G tilde


@dataclass(frozen=True)
class GrowthReport:
    """Lower enclosures of G-tilde(k) partial sums at doubling outer depths."""

    depths: tuple[int, ...]
    partial: tuple[float, ...]
    increments: tuple[float, ...]
    exponent: float | None


def _log_weighted_tail(w: WeightSequence, M: int) -> float:
    """Upper bound of sum_{j > M} w_j^2 (1 + log j) / j by the integral test."""
    if w.kind is WeightKind.COMPOSITE:
        return 2.0 * w.scale * sum(_log_weighted_tail(part, M) for part in w.parts)
    end = w.support_end
    if end is not None:
        idx = w.support_indices()
        idx = idx[idx > M]
        return float(np.sum(w.squares(idx) * (1.0 + np.log(idx)) / idx)) if idx.size else 0.0
    x = math.log(M)
    if w.kind is WeightKind.POWER and w.alpha > 0:
        s = 2.0 * w.alpha
        return w.scale * M ** (-s) * ((1.0 + x) / s + 1.0 / s**2)
    if w.kind is WeightKind.LOG_POWER and w.a > 1 and M >= 2:
        s = 2.0 * w.a
        return w.scale * (x ** (1.0 - s) / (s - 1.0) + x ** (2.0 - s) / (s - 2.0))
    return math.inf


def _outer_tail(spec: Spectrum, w: WeightSequence, k: int, outer: int) -> tuple[float, TailMethod]:
    # Affine spectra: the terms n > outer sum to (1/2c) sum_j w_j^2 S_j with
    # S_j = sum_{n > outer} 1/(|n - k| |n - j|) <= 4/outer (j <= outer/2)
    # and <= 6 (1 + log j)/j otherwise, once outer >= 2k.
    end = w.support_end
    if spec.slope is None:
        return math.inf, TailMethod.NONE
    if end is not None:
        total = float(np.sum(w.squares(w.support_indices()))) if end else 0.0
        if total == 0:
            return 0.0, TailMethod.FINITE_SUPPORT
        a = max(k, end)
        if outer <= a:
            return math.inf, TailMethod.NONE
        return round_up(total / (2 * spec.slope * (outer - a))), TailMethod.FINITE_SUPPORT
    if outer < max(2 * k, 4):
        return math.inf, TailMethod.NONE
    M = outer // 2
    far = _log_weighted_tail(w, M)
    if not math.isfinite(far):
        return math.inf, TailMethod.NONE
    head = float(np.sum(w.squares(np.arange(1, M + 1))))
    return round_up((4.0 * head / outer + 6.0 * far) / (2.0 * spec.slope)), TailMethod.INTEGRAL_TEST


def g_tilde_partial_sums(
    spec: Spectrum,
    w: WeightSequence,
    k: int,
    N1: int,
    outer_depths: Sequence[int],
    inner_factor: int = 2,
) -> list[TailBound]:
    """Enclosures of G-tilde(k) truncated at each outer depth."""
    if k < 1 or N1 < 2:
        raise ValueError(f"need k >= 1 and N1 >= 2, got k={k}, N1={N1}")
    outer_max = max(outer_depths)
    tables = criteria_tables(spec, w, outer_max, inner_factor * outer_max)
    t = tables.table
    inner = t.value - t.local

    n = np.arange(1, outer_max + 1)
    mus = spec.upto(outer_max)
    r = half_gaps(spec, outer_max)
    mu_k = float(spec.at([k])[0])
    with np.errstate(divide="ignore"):
        c = np.where((n > N1) & (n != k), r / np.abs(mus - mu_k), 0.0)
    values = np.cumsum(c * inner)
    with np.errstate(invalid="ignore"):
        uppers = np.cumsum(np.where(c > 0, c * t.tail_upper, 0.0))
    lowers = np.cumsum(c * t.tail_lower)

    out = []
    for outer in outer_depths:
        tail, method = _outer_tail(spec, w, k, outer)
        i = outer - 1
        out.append(
            TailBound(
                float(values[i]),
                float(uppers[i]) + tail,
                weaker_method(method, t.method),
                float(lowers[i]),
            )
        )
    return out


def g_tilde_transform(spec: Spectrum, w: WeightSequence, k: int, N1: int, depth: int) -> TailBound:
    """Enclosure of G-tilde(k) = sum_{n > N1, n != k} r_n/|mu_n - mu_k| sum_{j != n} w_j^2/|mu_n - mu_j|."""
    return g_tilde_partial_sums(spec, w, k, N1, [depth])[0]


def g_tilde_growth(
    spec: Spectrum, w: WeightSequence, k: int, N1: int, log2_min: int, log2_max: int
) -> GrowthReport:
    """Doubling increments of G-tilde(k) and their decay exponent in log n."""
    depths = tuple(1 << i for i in range(log2_min, log2_max + 1))
    sums = g_tilde_partial_sums(spec, w, k, N1, depths)
    # Lower enclosures carry the inner tails, so truncation does not fake decay.
    partial = tuple(s.lower if math.isfinite(s.lower) else s.value for s in sums)
    increments = tuple(b - a for a, b in zip(partial, partial[1:]))
    exponent = None
    if any(increments):
        try:
            fit = rate_fit(dict(zip(depths[1:], increments)), RateModel.LOG_POWER)
            exponent = fit.beta
        except ValueError as e:
            logger.debug(f"No growth fit for G-tilde: {e}")
    return GrowthReport(depths, partial, increments, exponent)


# --------------------------------------------------------------------------- Schur


def _power_norm(M: np.ndarray) -> float:
    """Largest singular value by power iteration on M^T M."""
    if not np.any(M):
        return 0.0
    x = np.full(M.shape[1], 1.0 / math.sqrt(M.shape[1]))
    estimate = 0.0
    for _ in range(POWER_ITERATION_MAX):
        y = M @ x
        current = float(np.linalg.norm(y))
        x = M.T @ y
        nx = np.linalg.norm(x)
        if nx == 0:
            return current
        x /= nx
        if abs(current - estimate) <= POWER_ITERATION_TOL * current:
            return current
        estimate = current
    raise ConvergenceError(f"power iteration did not converge in {POWER_ITERATION_MAX} steps")


def matrix_M_norm(
    spec: Spectrum,
    w: WeightSequence,
    N: int,
    size: int,
    variant: str = "M",
    angles: float | np.ndarray | None = None,
) -> float:
    """Operator norm of the size x size truncation of M (or M' with z_n on the circles)."""
    if size < N:
        raise ValueError(f"size must be >= N, got size={size}, N={N}")
    mus = spec.upto(size)
    omega = np.sqrt(w.squares(np.arange(1, size + 1)))
    rows = np.arange(max(N, 1) - 1, size)
    if variant == "M":
        dist = np.abs(mus[rows, None] - mus[None, :])
        dist[np.arange(rows.size), rows] = math.inf
    elif variant == "Mprime":
        r = half_gaps(spec, size)
        theta = np.broadcast_to(np.asarray(0.0 if angles is None else angles, dtype=float), (size,))
        z = mus[rows] + r[rows] * np.exp(1j * theta[rows])
        dist = np.abs(z[:, None] - mus[None, :])
    else:
        raise ValueError(f"unknown variant {variant!r}")
    M = np.zeros((size, size))
    M[rows, :] = omega[rows, None] * omega[None, :] / dist
    return _power_norm(M)


# --------------------------------------------------------------------------- rates


class RateModel(str, Enum):
    POWER = "power"
    POWER_LOG = "power-log"
    LOG_POWER = "log-power"


@dataclass(frozen=True)
class RateFit:
    model: RateModel
    beta: float
    intercept: float
    residual: float


def rate_fit(values: Mapping[int, float], model: RateModel | str) -> RateFit:
    """Least-squares decay exponent in transformed coordinates.

    power: log v ~ -beta log n; power-log: log(v / log n) ~ -beta log n;
    log-power: log v ~ -beta log log n. The residual is the RMS misfit.
    """
    model = RateModel(model)
    n = np.asarray(sorted(values), dtype=float)
    v = np.asarray([values[k] for k in sorted(values)], dtype=float)
    if n.size < 8:
        raise ValueError(f"rate fit needs at least 8 samples, got {n.size}")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("rate fit needs positive finite samples")
    if n[0] < 2:
        raise ValueError("rate fit samples must start at n >= 2")
    log_n = np.log(n)
    if model is RateModel.POWER:
        x, y = log_n, np.log(v)
    elif model is RateModel.POWER_LOG:
        x, y = log_n, np.log(v / log_n)
    else:
        x, y = np.log(log_n), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return RateFit(model, float(-slope), float(intercept), residual)


@dataclass(frozen=True)
class DecayCheck:
    n_values: tuple[int, ...]
    products: tuple[float, ...]
    max_tail: float
    status: VerdictStatus


def monotone_l1_implies_decay_check(w: WeightSequence, depth: int) -> DecayCheck:
    """Track t_n log n along dyadic n for monotone weights."""
    if not w.is_monotone:
        raise ValueError(f"{w.kind.value} weights are not flagged monotone decreasing")
    ns = tuple(1 << i for i in range(1, int(math.log2(depth)) + 1))
    if len(ns) < 2:
        raise ValueError(f"depth {depth} too small for a dyadic decay check")
    prod = w.squares(np.asarray(ns)) * np.log(np.asarray(ns, dtype=float))
    tail = prod[len(prod) // 2 :]
    if not np.any(prod):
        status = VerdictStatus.HOLDS
    elif np.all(np.diff(tail) <= 0) and tail[-1] < tail[0]:
        status = VerdictStatus.HOLDS
    elif tail[-1] > tail[0]:
        status = VerdictStatus.FAILS
    else:
        status = VerdictStatus.INCONCLUSIVE
    return DecayCheck(ns, tuple(float(p) for p in prod), float(tail.max()), status)


# --------------------------------------------------------------------------- report


@dataclass(frozen=True)
class CriteriaParams:
    epsilon: float = DEFAULT_EPSILON
    horizon: int = DEFAULT_HORIZON
    depth: int | None = None
    fast_route: bool = False
    schatten_p: tuple[float, ...] = DEFAULT_SCHATTEN_P
    g_tilde_k: int = DEFAULT_GTILDE_K
    g_tilde_n1: int = DEFAULT_GTILDE_N1
    g_tilde_log2: tuple[int, int] = DEFAULT_GTILDE_LOG2
    sigma_n: tuple[int, ...] = ()

    @property
    def effective_depth(self) -> int:
        return self.depth or DEFAULT_DEPTH_FACTOR * self.horizon


@dataclass(frozen=True)
class CriteriaReport:
    rho_1: TailBound
    schatten: dict[float, TailBound]
    g_values: dict[int, TailBound]
    sigma: dict[int, SupEnclosure]
    g_tilde: dict[int, TailBound]
    schur: dict[int, SchurBounds]
    verdicts: dict[str, Verdict]
    n0_candidate: int | None
    n_star_candidate: int | None
    epsilon_index: int | None
    growth: GrowthReport | None = None
    decay_check: DecayCheck | None = None
    required: tuple[str, ...] = field(default=("summable", "schatten_ok", "g_decays"))


def sample_points(horizon: int) -> list[int]:
    """All n <= 32 plus the powers of two up to the horizon, and the horizon."""
    points = set(range(1, min(32, horizon) + 1))
    points.update(1 << i for i in range(int(math.log2(horizon)) + 1))
    points.add(horizon)
    return sorted(points)


def _summable_verdict(rho_1: TailBound) -> Verdict:
    if rho_1.divergent:
        return Verdict(VerdictStatus.FAILS, "sum w_j^2/mu_j diverges (integral test lower bound)")
    if rho_1.conclusive:
        return Verdict(VerdictStatus.HOLDS, f"sum w_j^2/mu_j <= {rho_1.upper:.6g} ({rho_1.method.value})")
    return Verdict(VerdictStatus.INCONCLUSIVE, "no tail method for sum w_j^2/mu_j")


def _schatten_verdict(schatten: Mapping[float, TailBound]) -> Verdict:
    finite = [p for p, b in sorted(schatten.items()) if b.conclusive]
    if finite:
        return Verdict(VerdictStatus.HOLDS, f"resolvent of A in S_p for p = {finite[0]:g}")
    return Verdict(VerdictStatus.INCONCLUSIVE, "no tested p gives a finite Schatten sum")


def _decay_route(spec: Spectrum, w: WeightSequence) -> str | None:
    if spec.slope is None:
        return None
    if w.kind is WeightKind.COMPOSITE:
        routes = [_decay_route(spec, part) for part in w.parts]
        return "composite of " + " and ".join(routes) if all(routes) else None
    if w.kind is WeightKind.GAP_SUPPORTED:
        return "gap-supported weights tending to 0" if w.admissible else None
    if w.support_end is not None:
        return "finitely supported weights"
    if w.is_monotone:
        return "monotone decreasing summable weights"
    return None


def _g_tilde_route(spec: Spectrum, w: WeightSequence) -> str | None:
    if spec.slope is None:
        return None
    if w.kind is WeightKind.COMPOSITE:
        routes = [_g_tilde_route(spec, part) for part in w.parts]
        return "composite of " + " and ".join(routes) if all(routes) else None
    if w.support_end is not None:
        return "finitely supported weights"
    if w.kind is WeightKind.POWER and w.alpha > 0:
        return f"power weights with alpha = {w.alpha:g}"
    if w.kind is WeightKind.LOG_POWER and w.a > 1:
        return f"log-power weights with a = {w.a:g} > 1"
    return None


def _g_decays_verdict(
    spec: Spectrum,
    w: WeightSequence,
    tables: CriteriaTables,
    epsilon: float,
    summable: Verdict,
    decay_check: DecayCheck | None = None,
) -> tuple[Verdict, int | None]:
    n_eps = tables.epsilon_index(epsilon)
    if n_eps is not None:
        return Verdict(
            VerdictStatus.HOLDS,
            f"G(n) <= {epsilon:g} for {n_eps} <= n <= {tables.horizon}",
        ), n_eps
    witness = tables.decay_witness(epsilon)
    if witness:
        listing = ", ".join(f"n = {n}" for n, _ in witness)
        return Verdict(
            VerdictStatus.FAILS,
            f"local term w_n^2/r_n does not decay: {listing}",
            witness,
        ), None
    note = ""
    route = _decay_route(spec, w)
    monotone_ok = not w.is_monotone or (decay_check is not None and decay_check.status is VerdictStatus.HOLDS)
    if route and summable.status is VerdictStatus.HOLDS and monotone_ok:
        note = f"G(n) -> 0 is implied for {route} on an affine spectrum, but not reached within the horizon"
    upper = float(tables.table.upper[tables.horizon // 2 - 1])
    return Verdict(
        VerdictStatus.INCONCLUSIVE,
        f"no certificate below {epsilon:g} within the horizon (G({tables.horizon // 2}) <= {upper:.6g})",
        note=note,
    ), None


def _g_tilde_verdict(
    spec: Spectrum, w: WeightSequence, growth: GrowthReport | None, g_tilde: Mapping[int, TailBound]
) -> Verdict:
    if growth is None or not g_tilde:
        return Verdict(VerdictStatus.INCONCLUSIVE, "G-tilde not evaluated")
    if growth.exponent is not None and growth.exponent < GROWTH_EXPONENT_MAX:
        witness = tuple(zip(growth.depths[1:], growth.increments))
        return Verdict(
            VerdictStatus.FAILS,
            f"doubling increments decay like (log n)^-{growth.exponent:.3f}: harmonic growth",
            witness,
        )
    route = _g_tilde_route(spec, w)
    note = f"boundedness in k is implied for {route}" if route else ""
    largest = max(b.upper for b in g_tilde.values())
    if math.isfinite(largest):
        ks = sorted(g_tilde)
        return Verdict(
            VerdictStatus.HOLDS,
            f"G-tilde(k) <= {largest:.6g} for k = {ks[0]}..{ks[-1]} (full outer sums enclosed)",
            note=note,
        )
    return Verdict(VerdictStatus.INCONCLUSIVE, "no finite enclosure of the outer G-tilde sums", note=note)


def _fast_route_verdict(verdicts: Mapping[str, Verdict]) -> Verdict:
    needed = ("summable", "g_decays", "g_tilde_bounded")
    states = [verdicts[name].status for name in needed]
    if all(s is VerdictStatus.HOLDS for s in states):
        return Verdict(VerdictStatus.HOLDS, "summable, G decays and G-tilde is bounded")
    failed = [name for name in needed if verdicts[name].status is VerdictStatus.FAILS]
    if failed:
        return Verdict(VerdictStatus.FAILS, f"fails: {', '.join(failed)}")
    return Verdict(VerdictStatus.INCONCLUSIVE, "some hypotheses of the simplified route are undecided")


def truncation_window(spec: Spectrum, horizon: int, depth: int) -> tuple[int, int]:
    """Horizon and depth that stay inside the finite part of the spectrum."""
    if spec.length is not None:
        return min(horizon, spec.length - 1), depth
    limit = spec.index_limit
    if limit is None or depth < limit:
        return horizon, depth
    D = limit - 1
    H = min(horizon, D // 2)
    logger.warning(f"mu_n overflows beyond n = {limit}: depth {depth} -> {D}, horizon {horizon} -> {H}")
    return H, D


def _gtilde_window(spec: Spectrum, params: CriteriaParams) -> tuple[int, int]:
    lo, hi = params.g_tilde_log2
    if spec.slope is None:
        hi = min(hi, 12)
        lo = min(lo, hi - 9)
    if spec.length is not None:
        hi = min(hi, int(math.log2(max(spec.length - 1, 2))) - 1)
        lo = max(1, min(lo, hi - 9))
    elif spec.index_limit is not None:
        # G-tilde tables reach depth 2 * 2^hi
        hi = min(hi, int(math.log2(max((spec.index_limit - 1) // 2, 2))))
        lo = max(1, min(lo, hi - 9))
    return max(lo, 1), hi


@timeit
def evaluate_criteria(spec: Spectrum, w: WeightSequence, params: CriteriaParams) -> CriteriaReport:
    """Run every criterion and derive the verdicts."""
    H, D = truncation_window(spec, params.horizon, params.effective_depth)
    logger.info(f"Evaluating criteria for {spec.kind.value} spectrum, {w.kind.value} weights (horizon {H}, depth {D})")
    tables = criteria_tables(spec, w, H, D)

    rho_1 = tables.rho(1)
    schatten = {float(p): schatten_sum(spec, float(p), D) for p in params.schatten_p}
    g_values = {n: tables.g(n) for n in sample_points(H)}
    sigma_ns = params.sigma_n or tuple(1 << i for i in range(1, int(math.log2(max(H // 2, 2))) + 1))
    sigma_ns = tuple(N for N in sigma_ns if 2 <= N <= H)
    sigma = {N: tables.sigma(N) for N in sigma_ns}
    schur = {N: tables.schur(N) for N in sigma_ns if tables.k_N(N)}
    n0, n_star = tables.certified_indices()

    lo, hi = _gtilde_window(spec, params)
    growth = None
    g_tilde: dict[int, TailBound] = {}
    if hi - lo >= 8:
        growth = g_tilde_growth(spec, w, params.g_tilde_k, params.g_tilde_n1, lo, hi)
        ks = [1 << i for i in range(1, hi - 1)]
        for k in ks:
            g_tilde[k] = g_tilde_transform(spec, w, k, params.g_tilde_n1, 1 << hi)

    verdicts: dict[str, Verdict] = {}
    verdicts["summable"] = _summable_verdict(rho_1)
    verdicts["schatten_ok"] = _schatten_verdict(schatten)
    decay_check = monotone_l1_implies_decay_check(w, D) if w.is_monotone else None
    verdicts["g_decays"], n_eps = _g_decays_verdict(
        spec, w, tables, params.epsilon, verdicts["summable"], decay_check
    )
    verdicts["g_tilde_bounded"] = _g_tilde_verdict(spec, w, growth, g_tilde)
    verdicts["fast_route_available"] = _fast_route_verdict(verdicts)

    required = ("summable", "schatten_ok", "g_decays")
    if params.fast_route:
        required += ("g_tilde_bounded", "fast_route_available")
    for name, verdict in verdicts.items():
        logger.info(f"Verdict {name}: {verdict.status.value} ({verdict.detail})")
    return CriteriaReport(
        rho_1=rho_1,
        schatten=schatten,
        g_values=g_values,
        sigma=sigma,
        g_tilde=g_tilde,
        schur=schur,
        verdicts=verdicts,
        n0_candidate=n0,
        n_star_candidate=n_star,
        epsilon_index=n_eps,
        growth=growth,
        decay_check=decay_check,
        required=required,
    )


def overall_status(report: CriteriaReport) -> VerdictStatus:
    """Combine the required verdicts: any failure wins, then any undecided."""
    states = [report.verdicts[name].status for name in report.required]
    if VerdictStatus.FAILS in states:
        return VerdictStatus.FAILS
    if VerdictStatus.INCONCLUSIVE in states:
        return VerdictStatus.INCONCLUSIVE
    return VerdictStatus.HOLDS
