"""Finite truncations of A, V, K(z), B(z) and T = A + V.

Form entries are stored as ``entries[j-1, k-1] = v(psi_j, psi_k) = <V psi_j, psi_k>``,
so the operator matrix of V is ``entries.T`` and every truncation of T, K, B uses
that orientation. All matrices are complex, even for real input.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.linalg

from config import CERTIFICATE_SLACK, logger
from sequence_models import Spectrum, WeightSequence, weighted_tail

HEADER = "# rieszlab perturbation matrix"


class CertificateError(ValueError):
    """An entry violates |v_jk| <= omega_j omega_k."""

    def __init__(self, j: int, k: int, value: float, bound: float):
        self.j, self.k = j, k
        super().__init__(f"entry ({j}, {k}): |v| = {value:.17g} exceeds omega_j omega_k = {bound:.17g}")


class SingularityError(np.linalg.LinAlgError):
    """z - T or I - B(z) is singular at truncated scale."""


class Storage(str, Enum):
    DENSE = "dense"
    BANDED = "banded"


def _weight_products(w: WeightSequence, size: int) -> np.ndarray:
    omega = np.sqrt(w.squares(np.arange(1, size + 1)))
    return np.outer(omega, omega)


def _first_violation(entries: np.ndarray, w: WeightSequence, slack: float) -> CertificateError | None:
    bound = _weight_products(w, entries.shape[0])
    bad = np.argwhere(np.abs(entries) > bound + slack)
    if bad.size == 0:
        return None
    j, k = bad[0]
    return CertificateError(int(j) + 1, int(k) + 1, float(abs(entries[j, k])), float(bound[j, k]))


def certificate_constant(entries: np.ndarray, w: WeightSequence) -> float:
    """Smallest C with |v_jk| <= C omega_j omega_k over the nonzero entries."""
    bound = _weight_products(w, entries.shape[0])
    nz = entries != 0
    if not np.any(nz):
        return 0.0
    if np.any(bound[nz] == 0):
        return np.inf
    return float(np.max(np.abs(entries[nz]) / bound[nz]))


@dataclass(frozen=True, eq=False)
class PerturbationMatrix:
    """Form matrix of V on the first ``size`` basis vectors, certified against ``weights``."""

    entries: np.ndarray
    weights: WeightSequence
    storage: Storage = Storage.DENSE
    bandwidth: int | None = None
    slack: float = field(default=CERTIFICATE_SLACK, repr=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"perturbation entries must be square, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        storage = Storage(self.storage)
        object.__setattr__(self, "storage", storage)
        if storage is Storage.BANDED:
            if self.bandwidth is None or self.bandwidth < 0:
                raise ValueError("banded storage needs a nonnegative bandwidth")
            j, k = np.nonzero(entries)
            outside = np.abs(j - k) > self.bandwidth
            if np.any(outside):
                i = int(np.argmax(outside))
                raise ValueError(
                    f"entry ({j[i] + 1}, {k[i] + 1}) lies outside bandwidth {self.bandwidth}"
                )
        error = _first_violation(entries, self.weights, self.slack)
        if error is not None:
            raise error

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def operator(self) -> np.ndarray:
        """Operator matrix: column l is V psi_l."""
        return self.entries.T

    def certificate_constant(self) -> float:
        return certificate_constant(self.entries, self.weights)

    def truncated(self, size: int) -> np.ndarray:
        if size > self.size:
            raise ValueError(f"size {size} exceeds perturbation size {self.size}")
        return self.operator[:size, :size]


def zero_perturbation(w: WeightSequence, size: int) -> PerturbationMatrix:
    return PerturbationMatrix(np.zeros((size, size), dtype=complex), w)


def random_certified_perturbation(
    w: WeightSequence,
    size: int,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    bandwidth: int | None = None,
) -> PerturbationMatrix:
    """Entries omega_j omega_k u_jk with |u_jk| <= amplitude and uniform phase."""
    if not 0 <= amplitude <= 1:
        raise ValueError(f"amplitude must lie in [0, 1], got {amplitude}")
    u = amplitude * rng.random((size, size)) * np.exp(2j * np.pi * rng.random((size, size)))
    entries = _weight_products(w, size) * u
    if bandwidth is None:
        return PerturbationMatrix(entries, w)
    j, k = np.indices((size, size))
    entries[np.abs(j - k) > bandwidth] = 0
    return PerturbationMatrix(entries, w, Storage.BANDED, bandwidth)


# --------------------------------------------------------------------------- K, B, T


def _k_entries(spec: Spectrum, z: complex, size: int) -> np.ndarray:
    w = complex(z) - spec.upto(size).astype(complex)
    if np.any(w == 0):
        j = int(np.argmax(w == 0)) + 1
        raise ValueError(f"z = {z} equals mu_{j}")
    arg = np.angle(w)
    arg = np.where(arg == -np.pi, np.pi, arg)
    return np.abs(w) ** -0.5 * np.exp(-0.5j * arg)


def k_diag(spec: Spectrum, z: complex, size: int) -> np.ndarray:
    """diag((z - mu_k)^(-1/2)) with the principal branch, arg in (-pi, pi]."""
    return np.diag(_k_entries(spec, z, size))


def b_matrix(spec: Spectrum, V: PerturbationMatrix, z: complex, size: int) -> np.ndarray:
    """B(z) = K(z) V K(z) at truncated scale; column l holds B psi_l."""
    k = _k_entries(spec, z, size)
    return k[:, None] * V.truncated(size) * k[None, :]


def hs_tail_bound(spec: Spectrum, w: WeightSequence, z: complex, size: int) -> float:
    """Upper bound of sum_{j > size} omega_j^2 / |z - mu_j|, the part of B(z) a truncation omits."""
    z = complex(z)
    if spec.length is not None:
        idx = np.arange(size + 1, spec.length + 1)
        return float(np.sum(w.squares(idx) / np.abs(z - spec.at(idx)))) if idx.size else 0.0
    tail = weighted_tail(spec, w, size).tail_upper
    mu_next = float(spec.at([size + 1])[0])
    if z.real >= mu_next:
        return math.inf
    return tail / (1.0 - max(z.real, 0.0) / mu_next)


def hs_bound_check(
    spec: Spectrum, w: WeightSequence, V: PerturbationMatrix, z: complex, size: int
) -> tuple[float, float, float]:
    """Frobenius norm of B(z), the truncated bound sum_j omega_j^2 / |z - mu_j| and its omitted tail."""
    B = b_matrix(spec, V, z, size)
    hs = float(np.linalg.norm(B, "fro"))
    bound = float(np.sum(w.squares(np.arange(1, size + 1)) / np.abs(complex(z) - spec.upto(size))))
    tail = hs_tail_bound(spec, w, z, size)
    if hs > bound + 1e-10:
        logger.warning(f"Hilbert-Schmidt norm {hs:.6g} exceeds weight bound {bound:.6g} at z = {z}")
    logger.debug(f"||B({z})||_HS = {hs:.6g}, bound {bound:.6g}, omitted tail <= {tail:.6g}")
    return hs, bound, tail


def _checked_inverse(matrix: np.ndarray, what: str) -> np.ndarray:
    if np.linalg.cond(matrix) > 1.0 / np.finfo(float).eps:
        raise SingularityError(f"{what} is singular")
    try:
        return scipy.linalg.inv(matrix)
    except np.linalg.LinAlgError as e:
        raise SingularityError(f"{what} is singular: {e}") from e


def resolvent_factorization_residual(spec: Spectrum, V: PerturbationMatrix, z: complex, size: int) -> float:
    """||(z - T)^-1 - K (I - B)^-1 K|| in the operator 2-norm."""
    z = complex(z)
    k = _k_entries(spec, z, size)
    T = np.diag(spec.upto(size).astype(complex)) + V.truncated(size)
    lhs = _checked_inverse(z * np.eye(size) - T, "z - T")
    B = k[:, None] * V.truncated(size) * k[None, :]
    rhs = k[:, None] * _checked_inverse(np.eye(size) - B, "I - B(z)") * k[None, :]
    return float(np.linalg.norm(lhs - rhs, 2))


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    matrix: np.ndarray
    spectrum: Spectrum
    weights: WeightSequence

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return self.spectrum.upto(self.size)


def build_truncated_T(spec: Spectrum, V: PerturbationMatrix, size: int) -> TruncatedOperator:
    """diag(mu_1..mu_size) + V, with the certificate re-checked on the leading block."""
    if size < 1 or size > V.size:
        raise ValueError(f"size must lie in [1, {V.size}], got {size}")
    error = _first_violation(V.entries[:size, :size], V.weights, V.slack)
    if error is not None:
        raise error
    matrix = np.diag(spec.upto(size).astype(complex)) + V.truncated(size)
    matrix.setflags(write=False)
    return TruncatedOperator(matrix, spec, V.weights)


# --------------------------------------------------------------------------- files


def write_perturbation(V: PerturbationMatrix, path: str | Path) -> Path:
    """Write the header and one "j k re im" row per nonzero entry."""
    path = Path(path)
    bandwidth = V.bandwidth if V.storage is Storage.BANDED else V.size - 1
    lines = [HEADER, f"size {V.size}", f"storage {V.storage.value}", f"bandwidth {bandwidth}"]
    for j, k in zip(*np.nonzero(V.entries)):
        v = V.entries[j, k]
        lines.append(f"{j + 1} {k + 1} {v.real:.17g} {v.imag:.17g}")
    path.write_text("\n".join(lines) + "\n")
    logger.debug(f"Wrote perturbation matrix of size {V.size} to {path}")
    return path


def read_perturbation(path: str | Path, weights: WeightSequence) -> PerturbationMatrix:
    """Parse a file written by :func:`write_perturbation` and certify it."""
    header: dict[str, str] = {}
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] in ("size", "storage", "bandwidth"):
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: malformed header line {line!r}")
            header[parts[0]] = parts[1]
            continue
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'j k re im', got {line!r}")
        rows.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
    if "size" not in header:
        raise ValueError(f"{path}: missing size header")
    size = int(header["size"])
    entries = np.zeros((size, size), dtype=complex)
    for j, k, re, im in rows:
        if not (1 <= j <= size and 1 <= k <= size):
            raise ValueError(f"{path}: entry ({j}, {k}) outside size {size}")
        entries[j - 1, k - 1] = complex(re, im)
    storage = Storage(header.get("storage", "dense"))
    bandwidth = int(header["bandwidth"]) if storage is Storage.BANDED else None
    return PerturbationMatrix(entries, weights, storage, bandwidth)
