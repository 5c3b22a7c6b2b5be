"""Models for the unperturbed spectrum and the subordination weights.

Everything downstream sums over infinitely many indices, so every sum here comes
with an enclosure: a truncated partial sum plus a two-sided bound on the omitted
tail (see :class:`TailBound`). The tail bounds use the integral test for
monotone closed-form summands, geometric comparison for geometric spectra and
exact remainders for finitely supported data.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from config import TAIL_ROUNDING, logger


class SpectrumKind(str, Enum):
    LINEAR = "linear"
    AFFINE = "affine"
    POWER = "power"
    GEOMETRIC = "geometric"
    EXPLICIT = "explicit"


class WeightKind(str, Enum):
    ZERO = "zero"
    POWER = "power"
    SQRTLOG_LOGLOG = "sqrtlog-loglog"
    LOG_POWER = "log-power"
    GAP_SUPPORTED = "gap-supported"
    COUNTEREXAMPLE = "counterexample"
    EXPLICIT = "explicit"
    COMPOSITE = "composite"


class TailMethod(str, Enum):
    INTEGRAL_TEST = "integral-test"
    GEOMETRIC = "geometric"
    FINITE_SUPPORT = "finite-support"
    NONE = "none"


# Ordering used when two tails are combined: the result is only as good as the weaker one.
_METHOD_RANK = {
    TailMethod.FINITE_SUPPORT: 0,
    TailMethod.GEOMETRIC: 1,
    TailMethod.INTEGRAL_TEST: 2,
    TailMethod.NONE: 3,
}


def weaker_method(*methods: TailMethod) -> TailMethod:
    """Return the least reliable of several tail methods."""
    return max(methods, key=lambda m: _METHOD_RANK[m])


def round_up(x: float) -> float:
    """Inflate a nonnegative tail bound by the enclosure rounding factor."""
    return x * (1.0 + TAIL_ROUNDING)


@dataclass(frozen=True)
class TailBound:
    """Enclosure of a sum of nonnegative terms.

    The true sum lies in ``[value + tail_lower, value + tail_upper]``. A
    ``tail_lower`` of +inf is a divergence proof; a ``tail_upper`` of +inf
    with a finite lower end means no tail method applied.
    """

    value: float
    tail_upper: float
    method: TailMethod
    tail_lower: float = 0.0

    @property
    def upper(self) -> float:
        return self.value + self.tail_upper

    @property
    def lower(self) -> float:
        return self.value + self.tail_lower

    @property
    def conclusive(self) -> bool:
        return math.isfinite(self.upper)

    @property
    def divergent(self) -> bool:
        return math.isinf(self.tail_lower)

    def scaled(self, c: float) -> "TailBound":
        return TailBound(
            self.value * c, self.tail_upper * c, self.method, self.tail_lower * c
        )


# --------------------------------------------------------------------------- spectra


@dataclass(frozen=True)
class Spectrum:
    """Strictly increasing positive eigenvalue sequence mu_1 < mu_2 < ...

    Closed-form kinds: linear (n), affine (c n + d), power (c n^gamma) and
    geometric (c q^(n-1)). Explicit lists are finite index sets.
    """

    kind: SpectrumKind
    c: float = 1.0
    d: float = 0.0
    gamma: float = 1.0
    q: float = 2.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        kind = SpectrumKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is SpectrumKind.AFFINE and not (self.c > 0 and self.c + self.d > 0):
            raise ValueError(f"affine spectrum needs c > 0 and c + d > 0, got c={self.c}, d={self.d}")
        if kind is SpectrumKind.POWER and not (self.c > 0 and self.gamma > 0):
            raise ValueError(f"power spectrum needs c > 0 and gamma > 0, got c={self.c}, gamma={self.gamma}")
        if kind is SpectrumKind.GEOMETRIC and not (self.c > 0 and self.q > 1):
            raise ValueError(f"geometric spectrum needs c > 0 and q > 1, got c={self.c}, q={self.q}")
        if kind is SpectrumKind.EXPLICIT:
            vals = np.asarray(self.values, dtype=float)
            if vals.size == 0:
                raise ValueError("explicit spectrum needs at least one value")
            if not np.all(np.isfinite(vals)) or vals[0] <= 0:
                raise ValueError("explicit spectrum values must be finite and positive")
            if np.any(np.diff(vals) <= 0):
                raise ValueError("explicit spectrum values must be strictly increasing")
            object.__setattr__(self, "values", tuple(float(v) for v in vals))

    @classmethod
    def linear(cls) -> "Spectrum":
        return cls(SpectrumKind.LINEAR)

    @classmethod
    def affine(cls, c: float, d: float) -> "Spectrum":
        return cls(SpectrumKind.AFFINE, c=float(c), d=float(d))

    @classmethod
    def power(cls, c: float, gamma: float) -> "Spectrum":
        return cls(SpectrumKind.POWER, c=float(c), gamma=float(gamma))

    @classmethod
    def geometric(cls, c: float, q: float) -> "Spectrum":
        return cls(SpectrumKind.GEOMETRIC, c=float(c), q=float(q))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "Spectrum":
        return cls(SpectrumKind.EXPLICIT, values=tuple(float(v) for v in values))

    @property
    def length(self) -> int | None:
        """Number of eigenvalues for explicit lists, None for closed forms."""
        if self.kind is SpectrumKind.EXPLICIT:
            return len(self.values)
        return None

    @property
    def slope(self) -> float | None:
        """Slope c of an affine (or linear) spectrum, None otherwise."""
        if self.kind is SpectrumKind.LINEAR:
            return 1.0
        if self.kind is SpectrumKind.AFFINE:
            return self.c
        return None

    @property
    def index_limit(self) -> int | None:
        """An index up to which every float mu_n is finite, None when that exceeds any usable depth."""
        big = math.log(np.finfo(float).max)
        if self.kind is SpectrumKind.GEOMETRIC:
            return int((big - math.log(self.c)) / math.log(self.q)) - 1
        if self.kind is SpectrumKind.POWER:
            limit = (big - math.log(self.c)) / self.gamma
            return int(math.exp(limit)) if limit < 40 else None
        return self.length

    def power_envelope(self) -> tuple[float, float, float] | None:
        """Constants (c_lo, c_hi, gamma) with c_lo n^gamma <= mu_n <= c_hi n^gamma."""
        if self.kind is SpectrumKind.LINEAR:
            return 1.0, 1.0, 1.0
        if self.kind is SpectrumKind.AFFINE:
            return min(self.c, self.c + self.d), max(self.c, self.c + self.d), 1.0
        if self.kind is SpectrumKind.POWER:
            return self.c, self.c, self.gamma
        return None

    def at(self, idx) -> np.ndarray:
        """Vectorised mu at 1-based indices."""
        n = np.asarray(idx, dtype=np.int64)
        if n.size and n.min() < 1:
            raise ValueError(f"spectrum indices start at 1, got {int(n.min())}")
        kind = self.kind
        if kind is SpectrumKind.LINEAR:
            return n.astype(float)
        if kind is SpectrumKind.AFFINE:
            return self.c * n + self.d
        if kind is SpectrumKind.POWER:
            return self.c * n.astype(float) ** self.gamma
        if kind is SpectrumKind.GEOMETRIC:
            with np.errstate(over="ignore"):
                return self.c * np.power(self.q, (n - 1).astype(float))
        if n.size and n.max() > len(self.values):
            raise IndexError(
                f"index {int(n.max())} out of range for explicit spectrum of length {len(self.values)}"
            )
        return np.asarray(self.values, dtype=float)[n - 1]

    def upto(self, n_max: int) -> np.ndarray:
        """mu_1, ..., mu_{n_max} as an array."""
        return self.at(np.arange(1, n_max + 1))


@dataclass(frozen=True)
class GapData:
    n: int
    r_plus: float
    r_minus: float | None
    r: float


def mu(spec: Spectrum, n: int) -> float:
    """Return mu_n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return float(spec.at([n])[0])


def gaps(spec: Spectrum, n: int) -> GapData:
    """Gap data at index n; r_1 is half the gap to mu_2."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if spec.length is not None and n + 1 > spec.length:
        raise IndexError(f"gap at n={n} needs mu_{n + 1}, explicit spectrum has {spec.length}")
    lo = max(n - 1, 1)
    m = spec.at(np.arange(lo, n + 2))
    mu_n, mu_next = m[-2], m[-1]
    r_plus = float(mu_next - mu_n)
    if n == 1:
        return GapData(n=1, r_plus=r_plus, r_minus=None, r=r_plus / 2)
    r_minus = float(mu_n - m[0])
    return GapData(n=n, r_plus=r_plus, r_minus=r_minus, r=min(r_minus, r_plus) / 2)


def half_gaps(spec: Spectrum, n_max: int) -> np.ndarray:
    """Vectorised r_1, ..., r_{n_max}."""
    if spec.length is not None and n_max + 1 > spec.length:
        raise IndexError(f"half gaps up to {n_max} need {n_max + 1} eigenvalues, have {spec.length}")
    mus = spec.upto(n_max + 1)
    r_plus = np.diff(mus)
    r = r_plus.copy()
    r[1:] = np.minimum(r_plus[1:], r_plus[:-1])
    return r / 2


# --------------------------------------------------------------------------- regions


@dataclass(frozen=True)
class BoxRegion:
    """The box Pi_0 = {-h1 < Re z <= right, |Im z| <= h2}."""

    h1: float
    h2: float
    right: float

    @property
    def label(self) -> str:
        return "box"

    def contains(self, z: complex) -> bool:
        return -self.h1 < z.real <= self.right and abs(z.imag) <= self.h2


@dataclass(frozen=True)
class DiscRegion:
    """Closed disc Pi_k of radius r_k around mu_k."""

    index: int
    center: float
    radius: float

    @property
    def label(self) -> str:
        return f"disc:{self.index}"

    def contains(self, z: complex) -> bool:
        return abs(z - self.center) <= self.radius


Region = BoxRegion | DiscRegion


def regions(spec: Spectrum, N0: int, h1: float, h2: float, n_max: int) -> list[Region]:
    """The box Pi_0(N0, h1, h2) followed by the discs Pi_k, N0 < k <= n_max."""
    if N0 < 1 or n_max <= N0:
        raise ValueError(f"need N0 >= 1 and n_max > N0, got N0={N0}, n_max={n_max}")
    if h1 <= 0 or h2 <= 0:
        raise ValueError(f"box parameters must be positive, got h1={h1}, h2={h2}")
    r = half_gaps(spec, n_max)
    mus = spec.upto(n_max)
    out: list[Region] = [BoxRegion(h1=float(h1), h2=float(h2), right=float(mus[N0 - 1] + r[N0 - 1]))]
    out.extend(
        DiscRegion(index=k, center=float(mus[k - 1]), radius=float(r[k - 1]))
        for k in range(N0 + 1, n_max + 1)
    )
    return out


def schatten_sum(spec: Spectrum, p: float, depth: int) -> TailBound:
    """Enclosure of sum_n mu_n^-p."""
    if p <= 0 or depth < 1:
        raise ValueError(f"need p > 0 and depth >= 1, got p={p}, depth={depth}")
    if spec.length is not None:
        total = float(np.sum(spec.upto(spec.length) ** -p))
        return TailBound(total, 0.0, TailMethod.FINITE_SUPPORT)
    with np.errstate(over="ignore", under="ignore"):
        value = float(np.sum(spec.upto(depth) ** -p))
    D = depth
    if spec.kind is SpectrumKind.GEOMETRIC:
        tail = spec.c**-p * spec.q ** (-p * D) / (1.0 - spec.q**-p)
        return TailBound(value, round_up(tail), TailMethod.GEOMETRIC, tail)
    if spec.slope is not None:
        c, d = spec.slope, (spec.d if spec.kind is SpectrumKind.AFFINE else 0.0)
        if p <= 1:
            return TailBound(value, math.inf, TailMethod.NONE, math.inf)
        upper = (c * D + d) ** (1 - p) / (c * (p - 1))
        lower = (c * (D + 1) + d) ** (1 - p) / (c * (p - 1))
        return TailBound(value, round_up(upper), TailMethod.INTEGRAL_TEST, lower)
    # power spectrum
    s = p * spec.gamma
    if s <= 1:
        return TailBound(value, math.inf, TailMethod.NONE, math.inf)
    scale = spec.c**-p / (s - 1)
    return TailBound(
        value,
        round_up(scale * D ** (1 - s)),
        TailMethod.INTEGRAL_TEST,
        scale * (D + 1) ** (1 - s),
    )


# --------------------------------------------------------------------------- weights


def gap_indices(a: float, count: int) -> tuple[int, ...]:
    """b_m = floor(m^a) for m = 1..count, exact at integer powers."""
    out = []
    for m in range(1, count + 1):
        x = m**a
        k = round(x)
        b = k if abs(x - k) <= 1e-9 * max(1.0, x) else math.floor(x)
        out.append(int(b))
    if any(b1 >= b2 for b1, b2 in zip(out, out[1:])):
        raise ValueError(f"gap indices collide for a={a}")
    return tuple(out)


def _tends_to_zero(values: Sequence[float]) -> bool:
    """Window test: the last quarter peaks below half the first quarter's peak."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0 or not np.any(vals):
        return True
    q = max(1, vals.size // 4)
    head, tail = vals[:q].max(), vals[-q:].max()
    return bool(head > 0 and tail <= head / 2)


@dataclass(frozen=True)
class WeightSequence:
    """Subordination weights omega_j >= 0 with |v_jk| <= omega_j omega_k.

    ``scale`` multiplies omega_j^2; ``values`` are omega_j for explicit lists and
    t_{b_m} = omega_{b_m}^2 for gap-supported weights.
    """

    kind: WeightKind
    alpha: float = 0.0
    a: float = 0.0
    values: tuple[float, ...] = ()
    support: tuple[int, ...] = ()
    parts: tuple["WeightSequence", ...] = ()
    scale: float = 1.0
    admissible: bool = True

    def __post_init__(self):
        kind = WeightKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.scale < 0:
            raise ValueError(f"weight scale must be nonnegative, got {self.scale}")
        if kind in (WeightKind.SQRTLOG_LOGLOG, WeightKind.LOG_POWER) and self.a <= 0:
            raise ValueError(f"{kind.value} weights need a > 0, got a={self.a}")
        if kind in (WeightKind.EXPLICIT, WeightKind.GAP_SUPPORTED) and any(v < 0 for v in self.values):
            raise ValueError(f"{kind.value} weights must be nonnegative")
        if kind is WeightKind.GAP_SUPPORTED and len(self.support) != len(self.values):
            raise ValueError("gap-supported weights need one value per support index")
        if kind is WeightKind.COMPOSITE and len(self.parts) != 2:
            raise ValueError("composite weights have exactly two parts")

    @classmethod
    def zero(cls) -> "WeightSequence":
        return cls(WeightKind.ZERO)

    @classmethod
    def power(cls, alpha: float) -> "WeightSequence":
        return cls(WeightKind.POWER, alpha=float(alpha))

    @classmethod
    def sqrtlog_loglog(cls, a: float) -> "WeightSequence":
        return cls(WeightKind.SQRTLOG_LOGLOG, a=float(a))

    @classmethod
    def log_power(cls, a: float) -> "WeightSequence":
        return cls(WeightKind.LOG_POWER, a=float(a))

    @classmethod
    def gap_supported(cls, a: float, values: Sequence[float]) -> "WeightSequence":
        if a <= 1:
            raise ValueError(f"gap-supported weights need a > 1, got a={a}")
        vals = tuple(float(v) for v in values)
        admissible = _tends_to_zero(vals)
        if not admissible:
            logger.warning("Gap-supported values do not tend to 0 within the supplied window")
        return cls(
            WeightKind.GAP_SUPPORTED,
            a=float(a),
            values=vals,
            support=gap_indices(a, len(vals)),
            admissible=admissible,
        )

    @classmethod
    def counterexample(cls) -> "WeightSequence":
        return cls(WeightKind.COUNTEREXAMPLE)

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "WeightSequence":
        return cls(WeightKind.EXPLICIT, values=tuple(float(v) for v in values))

    @classmethod
    def composite(cls, first: "WeightSequence", second: "WeightSequence") -> "WeightSequence":
        return cls(WeightKind.COMPOSITE, parts=(first, second))

    def scaled(self, c: float) -> "WeightSequence":
        """Weights with omega^2 multiplied by c."""
        if c < 0:
            raise ValueError(f"scale factor must be nonnegative, got {c}")
        return replace(self, scale=self.scale * c)

    @property
    def is_monotone(self) -> bool:
        """True when omega_j is known to be non-increasing in j."""
        kind = self.kind
        if kind in (WeightKind.ZERO, WeightKind.SQRTLOG_LOGLOG, WeightKind.LOG_POWER):
            return True
        if kind is WeightKind.POWER:
            return self.alpha >= 0
        if kind is WeightKind.EXPLICIT:
            return all(x >= y for x, y in zip(self.values, self.values[1:]))
        return False

    @property
    def support_end(self) -> int | None:
        """Largest index with omega_j > 0 for finitely supported weights, else None."""
        if self.kind is WeightKind.ZERO or self.scale == 0:
            return 0
        if self.kind is WeightKind.EXPLICIT:
            nz = [j for j, v in enumerate(self.values, start=1) if v != 0]
            return nz[-1] if nz else 0
        if self.kind is WeightKind.GAP_SUPPORTED:
            nz = [b for b, v in zip(self.support, self.values) if v != 0]
            return nz[-1] if nz else 0
        if self.kind is WeightKind.COMPOSITE:
            ends = [part.support_end for part in self.parts]
            return None if any(e is None for e in ends) else max(ends)
        return None

    def support_indices(self) -> np.ndarray:
        """Candidate nonzero indices of a finitely supported sequence."""
        end = self.support_end
        if end is None:
            raise ValueError(f"{self.kind.value} weights are not finitely supported")
        if self.kind is WeightKind.GAP_SUPPORTED:
            return np.asarray([b for b in self.support if b <= end], dtype=np.int64)
        if self.kind is WeightKind.COMPOSITE:
            idx = np.concatenate([part.support_indices() for part in self.parts])
            return np.unique(idx)
        return np.arange(1, end + 1, dtype=np.int64)

    def squares(self, idx) -> np.ndarray:
        """Vectorised omega_j^2 at 1-based indices (zero beyond explicit lists)."""
        j = np.asarray(idx, dtype=np.int64)
        t = self._unscaled_squares(j)
        return t * self.scale if self.scale != 1.0 else t

    def _unscaled_squares(self, j: np.ndarray) -> np.ndarray:
        kind = self.kind
        if kind is WeightKind.ZERO:
            return np.zeros(j.shape)
        if kind is WeightKind.POWER:
            return j.astype(float) ** (-2.0 * self.alpha)
        if kind is WeightKind.SQRTLOG_LOGLOG:
            x = np.log(np.maximum(j, 3).astype(float))
            return 1.0 / (x * np.log(x) ** (2.0 * self.a))
        if kind is WeightKind.LOG_POWER:
            return np.log(np.maximum(j, 2).astype(float)) ** (-2.0 * self.a)
        if kind is WeightKind.GAP_SUPPORTED:
            t = np.zeros(j.shape)
            if not self.support:
                return t
            b = np.asarray(self.support, dtype=np.int64)
            pos = np.clip(np.searchsorted(b, j), 0, b.size - 1)
            hit = b[pos] == j
            t[hit] = np.asarray(self.values)[pos[hit]]
            return t
        if kind is WeightKind.COUNTEREXAMPLE:
            k = (j + 1) // 2
            m = np.floor(np.sqrt(k.astype(float))).astype(np.int64)
            m = np.where((m + 1) * (m + 1) <= k, m + 1, m)
            m = np.where(m * m > k, m - 1, m)
            square = m * m == k
            s = np.where(square, np.sqrt(np.maximum(1.0 - 1.0 / k, 0.0)), 0.0)
            return s / 2.0
        if kind is WeightKind.EXPLICIT:
            vals = np.asarray(self.values, dtype=float)
            t = np.zeros(j.shape)
            inside = j <= vals.size
            t[inside] = vals[j[inside] - 1] ** 2
            return t
        first, second = self.parts
        return (np.sqrt(first.squares(j)) + np.sqrt(second.squares(j))) ** 2


def omega(weights: WeightSequence, j: int) -> float:
    """Return omega_j."""
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    if weights.kind is WeightKind.EXPLICIT and j > len(weights.values):
        raise IndexError(f"index {j} out of range for explicit weights of length {len(weights.values)}")
    return float(np.sqrt(weights.squares([j])[0]))


# --------------------------------------------------------------------------- tails

# First index from which each closed-form family is given by its formula and decreasing.
_FORMULA_START = {
    WeightKind.POWER: 1,
    WeightKind.LOG_POWER: 2,
    WeightKind.SQRTLOG_LOGLOG: 3,
}


def _integral_upper(w: WeightSequence, gamma: float, x: float) -> float:
    """Upper bound for the integral of t(y) y^-gamma over [x, inf), unscaled t."""
    kind = w.kind
    if kind is WeightKind.POWER:
        p = 2 * w.alpha + gamma
        return x ** (1 - p) / (p - 1) if p > 1 else math.inf
    if gamma < 1:
        return math.inf
    two_a = 2 * w.a
    if kind is WeightKind.LOG_POWER:
        if gamma == 1:
            return math.log(x) ** (1 - two_a) / (two_a - 1) if two_a > 1 else math.inf
        return math.log(x) ** -two_a * x ** (1 - gamma) / (gamma - 1)
    loglog = math.log(math.log(x))
    if gamma == 1:
        return loglog ** (1 - two_a) / (two_a - 1) if two_a > 1 else math.inf
    return x ** (1 - gamma) / (math.log(x) * loglog**two_a * (gamma - 1))


def _integral_lower(w: WeightSequence, gamma: float, x: float) -> float:
    """Lower bound for the same integral; 0 where no closed form is used."""
    kind = w.kind
    if kind is WeightKind.POWER:
        p = 2 * w.alpha + gamma
        return x ** (1 - p) / (p - 1) if p > 1 else math.inf
    if gamma < 1:
        return math.inf
    if gamma > 1:
        return 0.0
    two_a = 2 * w.a
    if two_a <= 1:
        return math.inf
    if kind is WeightKind.LOG_POWER:
        return math.log(x) ** (1 - two_a) / (two_a - 1)
    return math.log(math.log(x)) ** (1 - two_a) / (two_a - 1)


def _exact_remainder(spec: Spectrum, w: WeightSequence, idx: np.ndarray) -> float:
    if idx.size == 0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.sum(w.squares(idx) / spec.at(idx)))


def weighted_tail(spec: Spectrum, w: WeightSequence, depth: int) -> TailBound:
    """Two-sided bound on sum_{j > depth} omega_j^2 / mu_j, returned with value 0."""
    D = depth
    if spec.length is not None:
        rest = _exact_remainder(spec, w, np.arange(D + 1, spec.length + 1))
        return TailBound(0.0, round_up(rest), TailMethod.FINITE_SUPPORT, rest)

    end = w.support_end
    if end is not None:
        idx = w.support_indices()
        rest = _exact_remainder(spec, w, idx[idx > D])
        return TailBound(0.0, round_up(rest), TailMethod.FINITE_SUPPORT, rest)

    if w.kind is WeightKind.COMPOSITE:
        tails = [weighted_tail(spec, part, D) for part in w.parts]
        upper = 2.0 * sum(t.tail_upper for t in tails) * w.scale
        lower = sum(t.tail_lower for t in tails) * w.scale
        return TailBound(0.0, upper, weaker_method(*(t.method for t in tails)), lower)

    if w.kind is WeightKind.COUNTEREXAMPLE:
        return _counterexample_tail(spec, w, D)

    start = _FORMULA_START.get(w.kind)
    if start is None or not w.is_monotone:
        return TailBound(0.0, math.inf, TailMethod.NONE)

    if spec.kind is SpectrumKind.GEOMETRIC:
        head_idx = np.arange(D + 1, max(D, start) + 1)
        head = _exact_remainder(spec, w, head_idx)
        first = max(D, start) + 1
        lead = float(w.squares([first])[0] / spec.at([first])[0])
        upper = head + lead / (1.0 - 1.0 / spec.q)
        return TailBound(0.0, round_up(upper), TailMethod.GEOMETRIC, head + lead)

    envelope = spec.power_envelope()
    if envelope is None:
        return TailBound(0.0, math.inf, TailMethod.NONE)
    c_lo, c_hi, gamma = envelope
    from_index = max(D, start)
    head = _exact_remainder(spec, w, np.arange(D + 1, from_index + 1))
    upper = head + w.scale * _integral_upper(w, gamma, from_index) / c_lo
    lower = head + w.scale * _integral_lower(w, gamma, from_index + 1) / c_hi
    method = TailMethod.INTEGRAL_TEST if math.isfinite(upper) else TailMethod.NONE
    return TailBound(0.0, round_up(upper), method, lower)


def _counterexample_tail(spec: Spectrum, w: WeightSequence, D: int) -> TailBound:
    # Blocks m with 2m^2 > D carry the whole tail; each contributes at most m^(-2 gamma)/c_lo.
    if spec.kind is SpectrumKind.GEOMETRIC:
        first = float(spec.at([D + 1])[0])
        upper = w.scale * 0.5 / (first * (1.0 - 1.0 / spec.q))
        return TailBound(0.0, round_up(upper), TailMethod.GEOMETRIC)
    envelope = spec.power_envelope()
    if envelope is None or 2 * envelope[2] <= 1:
        return TailBound(0.0, math.inf, TailMethod.NONE)
    c_lo, _, gamma = envelope
    m0 = math.isqrt(D // 2) + 1
    series = m0 ** (-2 * gamma) + m0 ** (1 - 2 * gamma) / (2 * gamma - 1)
    return TailBound(0.0, round_up(w.scale * series / c_lo), TailMethod.INTEGRAL_TEST)


# --------------------------------------------------------------------------- config


def spectrum_from_config(section: Mapping[str, Any]) -> Spectrum:
    """Build a Spectrum from a ``{"kind": ..., "params": {...}}`` mapping."""
    try:
        kind = SpectrumKind(section.get("kind", "linear"))
    except ValueError as e:
        raise ValueError(f"unknown spectrum kind: {section.get('kind')!r}") from e
    params = dict(section.get("params", {}))
    allowed = {
        SpectrumKind.LINEAR: set(),
        SpectrumKind.AFFINE: {"c", "d"},
        SpectrumKind.POWER: {"c", "gamma"},
        SpectrumKind.GEOMETRIC: {"c", "q"},
        SpectrumKind.EXPLICIT: {"values"},
    }[kind]
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"unknown parameters for {kind.value} spectrum: {sorted(unknown)}")
    if kind is SpectrumKind.EXPLICIT:
        return Spectrum.explicit(params.get("values", ()))
    return Spectrum(kind, **{k: float(v) for k, v in params.items()})


def weights_from_config(section: Mapping[str, Any]) -> WeightSequence:
    """Build a WeightSequence from a ``{"kind": ..., "params": {...}}`` mapping."""
    try:
        kind = WeightKind(section.get("kind", "zero"))
    except ValueError as e:
        raise ValueError(f"unknown weight kind: {section.get('kind')!r}") from e
    params = dict(section.get("params", {}))
    scale = float(params.pop("scale", 1.0))
    if kind is WeightKind.ZERO:
        w = WeightSequence.zero()
    elif kind is WeightKind.POWER:
        w = WeightSequence.power(params.pop("alpha", 1.0))
    elif kind is WeightKind.SQRTLOG_LOGLOG:
        w = WeightSequence.sqrtlog_loglog(params.pop("a", 1.0))
    elif kind is WeightKind.LOG_POWER:
        w = WeightSequence.log_power(params.pop("a", 1.0))
    elif kind is WeightKind.GAP_SUPPORTED:
        w = WeightSequence.gap_supported(params.pop("a", 2.0), params.pop("values", ()))
    elif kind is WeightKind.COUNTEREXAMPLE:
        w = WeightSequence.counterexample()
    elif kind is WeightKind.EXPLICIT:
        w = WeightSequence.explicit(params.pop("values", ()))
    else:
        parts = params.pop("parts", None)
        if not parts or len(parts) != 2:
            raise ValueError("composite weights need params.parts with two weight sections")
        w = WeightSequence.composite(*(weights_from_config(p) for p in parts))
    if params:
        raise ValueError(f"unknown parameters for {kind.value} weights: {sorted(params)}")
    return w.scaled(scale) if scale != 1.0 else w
