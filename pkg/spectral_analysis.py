"""Truncated eigensystems of T = A + V and the Riesz-basis diagnostics.

Eigenpairs come with left vectors so that rank-one Riesz projections can be
written down directly; contour quadrature of the resolvent gives an independent
construction to compare against.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from config import (
    AGREEMENT_TOL,
    BOX_CONTOUR_MAX_SIZE,
    BOX_NODES_PER_SIDE,
    BOX_PANEL_LENGTH,
    CLUSTER_TOL,
    DEFAULT_CONTOUR_CHECKS,
    DEFAULT_DRAWS,
    DEFAULT_QUAD_NODES,
    DEFAULT_SIZE,
    EIGEN_RESIDUAL_TOL,
    IDEMPOTENCY_TOL,
    MAX_SERIES_EXPONENT,
    MIN_QUAD_NODES,
    NEAR_CIRCLE_TOL,
    PAIRING_TOL,
    STABILITY_TOL,
    logger,
)
from criteria import box_parameters, criteria_tables
from operator_lab import PerturbationMatrix, TruncatedOperator
from performance import timeit
from sequence_models import BoxRegion, DiscRegion, Region, Spectrum, WeightSequence, half_gaps, regions


class ContourError(ValueError):
    """An eigenvalue sits on (or within 1e-8 of) the contour, or a node is singular."""


class DefectiveEigenvalueError(ValueError):
    """Left and right eigenvectors are (numerically) orthogonal."""


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: complex
    right: np.ndarray
    left: np.ndarray
    pairing: complex
    clustered: bool = False
    residual: float = 0.0

    @property
    def simple(self) -> bool:
        return not self.clustered and abs(self.pairing) > PAIRING_TOL


@dataclass(frozen=True, eq=False)
class RankOneProjection:
    """P f = <f, left> / <right, left> * right."""

    right: np.ndarray
    left: np.ndarray
    pairing: complex

    @classmethod
    def from_pair(cls, pair: EigenPair) -> "RankOneProjection":
        if not pair.simple:
            raise DefectiveEigenvalueError(
                f"eigenvalue {pair.value:.12g} is clustered or has pairing {abs(pair.pairing):.3g}"
            )
        return cls(pair.right, pair.left, pair.pairing)

    @classmethod
    def coordinate(cls, n: int, size: int) -> "RankOneProjection":
        e = np.zeros(size, dtype=complex)
        e[n - 1] = 1.0
        return cls(e, e, 1.0 + 0j)

    def matrix(self) -> np.ndarray:
        return np.outer(self.right, self.left.conj()) / self.pairing

    def norm(self) -> float:
        return float(np.linalg.norm(self.right) * np.linalg.norm(self.left) / abs(self.pairing))

    def quadratic_form(self, f: np.ndarray) -> complex:
        return complex(np.vdot(self.left, f) * np.vdot(f, self.right) / self.pairing)

    def idempotency_residual(self) -> float:
        return abs(np.vdot(self.left, self.right) / self.pairing - 1.0) * self.norm()


Projection = RankOneProjection | np.ndarray


# --------------------------------------------------------------------------- eigen


def matrix_scale(M: np.ndarray) -> float:
    """sqrt(||M||_1 ||M||_inf), an upper bound for ||M||_2."""
    return math.sqrt(np.linalg.norm(M, 1) * np.linalg.norm(M, np.inf)) or 1.0


def _blocks(matrix: np.ndarray) -> list[np.ndarray]:
    pattern = matrix != 0
    np.fill_diagonal(pattern, False)
    count, labels = connected_components(csr_matrix(pattern), directed=True, connection="weak")
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(count + 1))
    return [order[bounds[i] : bounds[i + 1]] for i in range(count)]


@timeit
def eigensystem(T: TruncatedOperator) -> list[EigenPair]:
    """All eigenpairs of T sorted by real part, with unit right and left vectors.

    Decoupled blocks are solved separately after shifting by their mean diagonal.
    """
    M = np.asarray(T.matrix, dtype=complex)
    n = M.shape[0]
    scale = matrix_scale(M)
    values = np.empty(n, dtype=complex)
    rights = np.zeros((n, n), dtype=complex)
    lefts = np.zeros((n, n), dtype=complex)
    col = 0
    blocks = _blocks(M)
    logger.debug(f"Eigen-solve of size {n} in {len(blocks)} blocks")
    for idx in blocks:
        block = M[np.ix_(idx, idx)]
        shift = complex(np.mean(np.diag(block)))
        w, vl, vr = scipy.linalg.eig(block - shift * np.eye(idx.size), left=True, right=True)
        cols = slice(col, col + idx.size)
        values[cols] = w + shift
        rights[idx, cols] = vr
        lefts[idx, cols] = vl
        col += idx.size

    rights /= np.linalg.norm(rights, axis=0)
    lefts /= np.linalg.norm(lefts, axis=0)
    order = np.lexsort((values.imag, values.real))
    values, rights, lefts = values[order], rights[:, order], lefts[:, order]

    gaps = np.abs(values[:, None] - values[None, :])
    np.fill_diagonal(gaps, np.inf)
    clustered = gaps.min(axis=1) <= CLUSTER_TOL if n > 1 else np.zeros(n, dtype=bool)
    pairings = np.einsum("ij,ij->j", lefts.conj(), rights)
    residuals = np.linalg.norm(M @ rights - rights * values, axis=0)
    bad = residuals > EIGEN_RESIDUAL_TOL * scale
    if np.any(bad):
        logger.warning(f"{int(bad.sum())} eigenpairs exceed the residual tolerance")
    if np.any(clustered):
        logger.warning(f"{int(clustered.sum())} eigenvalues lie in clusters closer than {CLUSTER_TOL:g}")
    return [
        EigenPair(complex(values[i]), rights[:, i], lefts[:, i], complex(pairings[i]), bool(clustered[i]), float(residuals[i]))
        for i in range(n)
    ]


def riesz_projection_eig(pair: EigenPair) -> np.ndarray:
    """Rank-one projection (<., left>/pairing) right of a simple eigenvalue."""
    return RankOneProjection.from_pair(pair).matrix()


# --------------------------------------------------------------------------- contours


def _resolvent(T: TruncatedOperator, z: complex) -> np.ndarray:
    try:
        return scipy.linalg.solve(z * np.eye(T.size) - T.matrix, np.eye(T.size, dtype=complex))
    except np.linalg.LinAlgError as e:
        raise ContourError(f"resolvent singular at node {z:.12g}") from e


def riesz_projection_contour(
    T: TruncatedOperator,
    center: complex,
    radius: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    eigenvalues: np.ndarray | None = None,
) -> np.ndarray:
    """Trapezoidal approximation of (2 pi i)^-1 of the resolvent integral over a circle."""
    if quad_nodes < MIN_QUAD_NODES:
        raise ValueError(f"quad_nodes must be >= {MIN_QUAD_NODES}, got {quad_nodes}")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    lam = np.linalg.eigvals(T.matrix) if eigenvalues is None else np.asarray(eigenvalues)
    near = np.abs(np.abs(lam - center) - radius) <= NEAR_CIRCLE_TOL
    if np.any(near):
        raise ContourError(f"eigenvalue {lam[np.argmax(near)]:.12g} lies on the circle |z - {center}| = {radius}")
    P = np.zeros((T.size, T.size), dtype=complex)
    for theta in 2 * np.pi * np.arange(quad_nodes) / quad_nodes:
        step = radius * np.exp(1j * theta)
        P += step * _resolvent(T, center + step)
    return P / quad_nodes


def _segment_distance(lam: np.ndarray, a: complex, b: complex) -> np.ndarray:
    d = b - a
    s = np.clip(((lam - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(lam - (a + s * d))


def riesz_projection_box(
    T: TruncatedOperator,
    box: BoxRegion,
    nodes_per_side: int = BOX_NODES_PER_SIDE,
    eigenvalues: np.ndarray | None = None,
) -> np.ndarray:
    """Gauss-Legendre quadrature of the resolvent over the boundary of the box."""
    corners = [
        complex(-box.h1, -box.h2),
        complex(box.right, -box.h2),
        complex(box.right, box.h2),
        complex(-box.h1, box.h2),
    ]
    sides = list(zip(corners, corners[1:] + corners[:1]))
    lam = np.linalg.eigvals(T.matrix) if eigenvalues is None else np.asarray(eigenvalues)
    for a, b in sides:
        near = _segment_distance(lam, a, b) <= NEAR_CIRCLE_TOL
        if np.any(near):
            raise ContourError(f"eigenvalue {lam[np.argmax(near)]:.12g} lies on the box boundary")
    x, wts = leggauss(nodes_per_side)
    P = np.zeros((T.size, T.size), dtype=complex)
    for a, b in sides:
        panels = max(1, math.ceil(abs(b - a) / BOX_PANEL_LENGTH))
        for p in range(panels):
            lo = a + (b - a) * p / panels
            hi = a + (b - a) * (p + 1) / panels
            half = (hi - lo) / 2
            for s, wt in zip(x, wts):
                P += wt * half * _resolvent(T, lo + half * (s + 1))
    return P / (2j * np.pi)


# --------------------------------------------------------------------------- diagnostics


def disjointness_residual(projs: Sequence[Projection]) -> float:
    """max over pairs of ||P_j P_k - delta_jk P_j|| in the operator 2-norm."""
    if not projs:
        raise ValueError("need at least one projection")
    mats = [p.matrix() if isinstance(p, RankOneProjection) else np.asarray(p) for p in projs]
    worst = 0.0
    for j, Pj in enumerate(mats):
        for k, Pk in enumerate(mats):
            D = Pj @ Pk - (Pj if j == k else 0)
            worst = max(worst, float(np.linalg.norm(D, 2)))
    return worst


def rank_one_disjointness(projs: Sequence[RankOneProjection]) -> float:
    """Same residual for rank-one projections, through the Gram matrix of left and right vectors."""
    if not projs:
        raise ValueError("need at least one projection")
    R = np.column_stack([p.right for p in projs])
    L = np.column_stack([p.left for p in projs])
    pairing = np.array([p.pairing for p in projs])
    # ||P_j P_k|| = |<r_k, l_j>| ||r_j|| ||l_k|| / |p_j p_k|
    gram = L.conj().T @ R
    scale = np.linalg.norm(R, axis=0)[:, None] * np.linalg.norm(L, axis=0)[None, :]
    residual = np.abs(gram) * scale / np.abs(pairing[:, None] * pairing[None, :])
    own = np.abs(np.diag(gram) / pairing - 1.0) * np.diag(scale) / np.abs(pairing)
    np.fill_diagonal(residual, own)
    return float(residual.max())


def _quadratic(P: Projection, f: np.ndarray) -> complex:
    if isinstance(P, RankOneProjection):
        return P.quadratic_form(f)
    return complex(np.vdot(f, np.asarray(P) @ f))


def riesz_quadratic_sum(
    projs_T: Mapping[int, Projection],
    projs_A: Mapping[int, Projection],
    f: np.ndarray,
    N_start: int,
) -> tuple[float, dict[int, float]]:
    """sum_{n >= N_start} |<(P_n - P_n^0) f, f>| over indices present in both maps."""
    f = np.asarray(f, dtype=complex)
    if abs(np.linalg.norm(f) - 1.0) > 1e-12:
        raise ValueError("f must have unit norm")
    terms = {
        n: abs(_quadratic(projs_T[n], f) - _quadratic(projs_A[n], f))
        for n in sorted(set(projs_T) & set(projs_A))
        if n >= N_start
    }
    return float(sum(terms.values())), terms


def unit_vector(rng: np.random.Generator, size: int) -> np.ndarray:
    f = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return f / np.linalg.norm(f)


@dataclass(frozen=True)
class SeriesTermCheck:
    lhs: float
    bound_tau: float
    bound_halving: float
    tau: float
    residue: float | None = None


def series_term_check(
    spec: Spectrum,
    w: WeightSequence,
    V: PerturbationMatrix,
    s: int,
    N: int,
    f: np.ndarray,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    buffer: int | None = None,
    horizon: int | None = None,
) -> SeriesTermCheck:
    """Quadrature of sum_{n >= N} |(2 pi i)^-1 of <K B^(s+1) K f, f> over Gamma_n| and its bounds.

    Uses K B^(s+1) K = R (V R)^(s+1) with R = (z - A)^-1, so no square roots are taken.
    For s = 0 the residue closed form is returned alongside.
    """
    if not 0 <= s <= MAX_SERIES_EXPONENT:
        raise ValueError(f"s must lie in [0, {MAX_SERIES_EXPONENT}], got {s}")
    size = V.size
    buffer = size // 8 if buffer is None else buffer
    last = size - buffer
    if not 2 <= N <= last:
        raise ValueError(f"N must lie in [2, {last}], got {N}")
    f = np.asarray(f, dtype=complex)
    norm_f2 = float(np.vdot(f, f).real)

    horizon = horizon or max(4 * size, 1024)
    tau = criteria_tables(spec, w, horizon, 2 * horizon).tau(N)

    mus = spec.upto(size)
    r = half_gaps(spec, size)
    Vop = V.truncated(size)
    absV2 = np.abs(Vop) ** 2
    steps = np.exp(2j * np.pi * np.arange(quad_nodes) / quad_nodes)
    lhs = 0.0
    for n in range(N, last + 1):
        z = mus[n - 1] + r[n - 1] * steps
        R = 1.0 / (z[None, :] - mus[:, None])
        a = np.abs(R)
        hs = np.sqrt(np.sum(a * (absV2 @ a), axis=0))
        for q in np.nonzero(hs > 0.5)[0]:
            B = np.sqrt(R[:, q])[:, None] * Vop * np.sqrt(R[:, q])[None, :]
            if np.linalg.norm(B, 2) > 0.5:
                raise ValueError(f"||B(z)|| > 1/2 at z = {z[q]:.12g} on Gamma_{n}")
        Y = R * f[:, None]
        for _ in range(s + 1):
            Y = R * (Vop @ Y)
        g = f.conj() @ Y
        lhs += abs(np.mean(r[n - 1] * steps * g))

    residue = None
    if s == 0:
        D = mus[:, None] - mus[None, :]
        np.fill_diagonal(D, np.inf)
        D = 1.0 / D
        res = f.conj() * ((Vop * D) @ f) + f * ((Vop.T * D) @ f.conj())
        residue = float(np.sum(np.abs(res[N - 1 : last])))

    return SeriesTermCheck(
        lhs=lhs,
        bound_tau=2 ** (s + 2) * tau ** (s + 1) * norm_f2,
        bound_halving=2.0**-s * norm_f2,
        tau=tau,
        residue=residue,
    )


def basis_condition_number(eigs: Sequence[EigenPair], index_window: tuple[int, int]) -> float:
    """2-norm condition number of the unit right eigenvectors at 1-based positions lo..hi."""
    lo, hi = index_window
    if not 1 <= lo <= hi <= len(eigs):
        raise ValueError(f"window {index_window} outside 1..{len(eigs)}")
    chosen = [p for p in eigs[lo - 1 : hi] if p.simple]
    skipped = hi - lo + 1 - len(chosen)
    if skipped:
        logger.warning(f"{skipped} clustered eigenpairs excluded from the condition number")
    if not chosen:
        raise DefectiveEigenvalueError("no simple eigenpairs in the window")
    return float(np.linalg.cond(np.column_stack([p.right for p in chosen]), 2))


# --------------------------------------------------------------------------- localization


@dataclass(frozen=True)
class LocalizationReport:
    labels: tuple[str, ...]
    disc_counts: dict[int, int]
    box_count: int
    outside: tuple[int, ...]
    excluded: tuple[int, ...]


def _classify(lam: complex, box: BoxRegion | None, discs: Sequence[DiscRegion], centers: np.ndarray) -> str:
    if discs:
        i = int(np.argmin(np.abs(centers - lam)))
        near = [d for d in discs[max(i - 1, 0) : i + 2] if d.contains(lam)]
        if near:
            return min(near, key=lambda d: abs(lam - d.center)).label
    if box is not None and box.contains(lam):
        return box.label
    return "outside"


def localization_report(eigs: Sequence[EigenPair], regs: Sequence[Region], edge: float) -> LocalizationReport:
    """Assign each eigenvalue to its closest containing region; Re lambda > edge is excluded."""
    box = next((r for r in regs if isinstance(r, BoxRegion)), None)
    discs = [r for r in regs if isinstance(r, DiscRegion)]
    centers = np.array([d.center for d in discs])
    labels = []
    for pair in eigs:
        lam = pair.value
        labels.append("edge" if lam.real > edge else _classify(lam, box, discs, centers))
    counts = Counter(int(label.split(":")[1]) for label in labels if label.startswith("disc:"))
    disc_counts = {d.index: counts.get(d.index, 0) for d in discs}
    return LocalizationReport(
        labels=tuple(labels),
        disc_counts=disc_counts,
        box_count=labels.count("box"),
        outside=tuple(i + 1 for i, label in enumerate(labels) if label == "outside"),
        excluded=tuple(i + 1 for i, label in enumerate(labels) if label == "edge"),
    )


# --------------------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class SpectralParams:
    size: int = DEFAULT_SIZE
    buffer: int | None = None
    quad_nodes: int = DEFAULT_QUAD_NODES
    draws: int = DEFAULT_DRAWS
    n0: int | None = None
    h1: float | None = None
    h2: float | None = None
    contour_checks: int = DEFAULT_CONTOUR_CHECKS
    box_contour_max_size: int = BOX_CONTOUR_MAX_SIZE
    riesz_start: int | None = None
    depth: int | None = None

    @property
    def effective_buffer(self) -> int:
        return self.size // 8 if self.buffer is None else self.buffer


@dataclass(frozen=True)
class ProjectionRow:
    n: int
    norm: float
    rank: int
    idem_residual: float


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    localization: LocalizationReport
    projections: list[ProjectionRow]
    riesz_sums: list[float]
    n0: int
    n_star: int | None
    h1: float
    h2: float
    buffer: int
    disjointness: float
    condition_number: float | None
    contour_agreement: float | None = None
    quadrature_stability: float | None = None
    box_rank: int | None = None
    checks: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _spread(items: Sequence, count: int) -> list:
    if len(items) <= count:
        return list(items)
    picks = np.linspace(0, len(items) - 1, count).round().astype(int)
    return [items[i] for i in sorted(set(picks))]


@timeit
def analyze_spectrum(
    T: TruncatedOperator,
    params: SpectralParams,
    rng: np.random.Generator,
) -> SpectralReport:
    """Eigensystem, localization, projections and Riesz sums for one truncation."""
    spec, w = T.spectrum, T.weights
    size, buffer = T.size, params.effective_buffer
    last = size - buffer
    if last < 2:
        raise ValueError(f"edge buffer {buffer} leaves no usable indices at size {size}")
    notes: list[str] = []

    horizon = max(4 * size, 1024)
    if spec.length is not None:
        horizon = min(horizon, spec.length - 1)
    tables = criteria_tables(spec, w, horizon, params.depth or 2 * horizon)
    n0_cand, n_star = tables.certified_indices()
    n0 = params.n0 or n0_cand
    if n0 is None:
        n0 = 1
        logger.warning("No certified N0 candidate; using N0 = 1")
        notes.append("no certified N0 candidate, N0 = 1 used")
    n0 = min(n0, last - 1)
    depth = params.depth or 2 * horizon
    if params.h1 is None or params.h2 is None:
        h1, h2 = box_parameters(spec, w, n0, depth)
    h1 = params.h1 if params.h1 is not None else h1
    h2 = params.h2 if params.h2 is not None else h2

    eigs = eigensystem(T)
    lam = np.array([p.value for p in eigs])
    regs = regions(spec, n0, h1, h2, last)
    edge = float(spec.at([last])[0])
    loc = localization_report(eigs, regs, edge)
    if loc.excluded:
        notes.append(f"{len(loc.excluded)} eigenvalues beyond Re = {edge:g} excluded (edge buffer {buffer})")

    by_disc: dict[int, list[int]] = {}
    for i, label in enumerate(loc.labels):
        if label.startswith("disc:"):
            by_disc.setdefault(int(label.split(":")[1]), []).append(i)

    projections: dict[int, RankOneProjection] = {}
    rows: list[ProjectionRow] = []
    for n in sorted(by_disc):
        members = by_disc[n]
        if len(members) != 1 or not eigs[members[0]].simple:
            continue
        P = RankOneProjection.from_pair(eigs[members[0]])
        projections[n] = P
        rows.append(ProjectionRow(n, P.norm(), 1, P.idempotency_residual()))

    disjointness = rank_one_disjointness(list(projections.values())) if projections else 0.0

    start = params.riesz_start or n_star or n0 + 1
    start = max(start, n0 + 1)
    projs_A = {n: RankOneProjection.coordinate(n, size) for n in projections}
    riesz_sums = [
        riesz_quadratic_sum(projections, projs_A, unit_vector(rng, size), start)[0]
        for _ in range(params.draws)
    ]

    in_disc = [eigs[i] for i, label in enumerate(loc.labels) if label.startswith("disc:") and eigs[i].simple]
    condition = basis_condition_number(in_disc, (1, len(in_disc))) if in_disc else None

    report = SpectralReport(
        eigenvalues=lam,
        localization=loc,
        projections=rows,
        riesz_sums=riesz_sums,
        n0=n0,
        n_star=n_star,
        h1=h1,
        h2=h2,
        buffer=buffer,
        disjointness=disjointness,
        condition_number=condition,
        notes=notes,
    )

    if size <= params.box_contour_max_size:
        _contour_checks(T, eigs, regs, by_disc, projections, params, report)
    else:
        notes.append(f"contour checks skipped at size {size} > {params.box_contour_max_size}")

    checks = report.checks
    scale = matrix_scale(T.matrix)
    checks["eigen_residual"] = all(p.residual <= EIGEN_RESIDUAL_TOL * scale for p in eigs)
    checks["disc_counts_at_most_one"] = all(c <= 1 for c in loc.disc_counts.values())
    checks["idempotency"] = all(r.idem_residual <= IDEMPOTENCY_TOL * (1 + r.norm**2) for r in rows)
    checks["riesz_sums_bounded"] = max(riesz_sums, default=0.0) <= 2.0
    if report.contour_agreement is not None:
        checks["contour_agreement"] = report.contour_agreement <= AGREEMENT_TOL
        checks["quadrature_stability"] = report.quadrature_stability <= STABILITY_TOL
    checks["localization"] = not loc.outside
    if report.box_rank is not None:
        in_discs = sum(loc.disc_counts.values())
        checks["rank_additivity"] = report.box_rank + in_discs == size - len(loc.excluded)
    for name, ok in checks.items():
        logger.info(f"Spectral check {name}: {'ok' if ok else 'FAILED'}")
    return report


def _contour_checks(
    T: TruncatedOperator,
    eigs: Sequence[EigenPair],
    regs: Sequence[Region],
    by_disc: Mapping[int, list[int]],
    projections: Mapping[int, RankOneProjection],
    params: SpectralParams,
    report: SpectralReport,
) -> None:
    lam = report.eigenvalues
    discs = {r.index: r for r in regs if isinstance(r, DiscRegion)}
    candidates = [
        n for n in sorted(projections)
        if abs(eigs[by_disc[n][0]].value - discs[n].center) <= discs[n].radius / 2
    ]
    agreement = stability = 0.0
    for n in _spread(candidates, params.contour_checks):
        d = discs[n]
        fine = riesz_projection_contour(T, d.center, d.radius, params.quad_nodes, lam)
        coarse = riesz_projection_contour(T, d.center, d.radius, max(MIN_QUAD_NODES, params.quad_nodes // 2), lam)
        agreement = max(agreement, float(np.linalg.norm(fine - projections[n].matrix(), 2)))
        stability = max(stability, float(np.linalg.norm(fine - coarse, 2)))
    if candidates:
        report.contour_agreement = agreement
        report.quadrature_stability = stability
    box = next(r for r in regs if isinstance(r, BoxRegion))
    try:
        S0 = riesz_projection_box(T, box, eigenvalues=lam)
        report.box_rank = int(round(np.trace(S0).real))
    except ContourError as e:
        report.notes.append(f"box projection skipped: {e}")
