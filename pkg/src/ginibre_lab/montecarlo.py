"""Monte Carlo sampling of shifted real and complex Ginibre matrices.

Every sample ``i`` draws from its own generator seeded by
``SeedSequence(master_seed, spawn_key=(i, attempt))``, so results do not
depend on batching or on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EmptySample, LinAlgFailure
from .mde_core import ShiftParams, scale_c

REAL = "real"
COMPLEX = "complex"
MAX_RETRIES = 3
BOUND_C = 10.0
_BATCH = 256


@dataclass(frozen=True)
class EnsembleSpec:
    N: int
    symmetry: str
    z: complex
    n_samples: int
    master_seed: int

    def __post_init__(self) -> None:
        if self.symmetry not in (REAL, COMPLEX):
            raise DomainError(f"symmetry must be 'real' or 'complex', got {self.symmetry!r}")
        if self.n_samples < 1:
            raise DomainError("n_samples must be at least 1")
        if self.N < 1:
            raise DomainError("N must be positive")
        object.__setattr__(self, "z", complex(self.z))

    @property
    def params(self) -> ShiftParams:
        return ShiftParams(self.N, self.z)


@dataclass(frozen=True)
class TailSample:
    lambda1: float
    sample_index: int
    seed: int


def _threads() -> int:
    raw = os.environ.get("GINIBRE_LAB_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sample_seed(master_seed: int, index: int, attempt: int) -> tuple[np.random.SeedSequence, int]:
    ss = np.random.SeedSequence(master_seed, spawn_key=(index, attempt))
    return ss, int(ss.generate_state(1, np.uint64)[0])


def draw_matrix(N: int, symmetry: str, rng: np.random.Generator) -> np.ndarray:
    """Ginibre matrix with ``E|x|^2 = 1/N`` (and ``E x^2 = 0`` if complex)."""
    if symmetry == REAL:
        return rng.standard_normal((N, N)) / math.sqrt(N)
    re = rng.standard_normal((N, N))
    im = rng.standard_normal((N, N))
    return (re + 1j * im) / math.sqrt(2 * N)


def _singular_values(spec: EnsembleSpec, indices: Sequence[int]) -> list[tuple[np.ndarray, int]]:
    """Squared singular values of ``X - z`` for each index, with the seed used."""
    mats = []
    seeds = []
    for i in indices:
        ss, seed = _sample_seed(spec.master_seed, i, 0)
        X = draw_matrix(spec.N, spec.symmetry, np.random.default_rng(ss))
        mats.append(X - spec.z * np.eye(spec.N))
        seeds.append(seed)
    out: list[tuple[np.ndarray, int]] = []
    try:
        svals = np.linalg.svd(np.stack(mats), compute_uv=False)
        return [(s**2, seed) for s, seed in zip(svals, seeds)]
    except np.linalg.LinAlgError:
        pass
    for i, M, seed in zip(indices, mats, seeds):
        out.append(_retry_single(spec, i, M, seed))
    return out


def _retry_single(spec: EnsembleSpec, index: int, M: np.ndarray, seed: int) -> tuple[np.ndarray, int]:
    for attempt in range(MAX_RETRIES + 1):
        try:
            return np.linalg.svd(M, compute_uv=False) ** 2, seed
        except np.linalg.LinAlgError:
            ss, seed = _sample_seed(spec.master_seed, index, attempt + 1)
            M = draw_matrix(spec.N, spec.symmetry, np.random.default_rng(ss)) - spec.z * np.eye(spec.N)
    raise LinAlgFailure(f"sample {index} failed after {MAX_RETRIES} retries")


def _map_batches(spec: EnsembleSpec, fn: Callable[[list[tuple[np.ndarray, int]]], list]) -> list:
    batches = [
        list(range(lo, min(lo + _BATCH, spec.n_samples)))
        for lo in range(0, spec.n_samples, _BATCH)
    ]

    def work(idx):
        return fn(_singular_values(spec, idx))

    threads = _threads()
    if threads == 1:
        parts = [work(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, batches))
    return [item for part in parts for item in part]


def squared_singular_values(spec: EnsembleSpec) -> np.ndarray:
    """All eigenvalues of ``Y`` per sample, shape ``(n_samples, N)``, ascending."""
    rows = _map_batches(spec, lambda svs: [np.sort(s) for s, _ in svs])
    return np.array(rows)


def sample_lambda1(spec: EnsembleSpec) -> list[TailSample]:
    """Smallest eigenvalue of ``Y = (X - z)(X - z)^*`` for each sample."""
    if spec.N < 2:
        raise DomainError("sampling needs N >= 2")
    rows = _map_batches(spec, lambda svs: [(float(np.min(s)), seed) for s, seed in svs])
    return [TailSample(lam, i, seed) for i, (lam, seed) in enumerate(rows)]


class EmpiricalCdf:
    """Right-continuous empirical distribution function."""

    def __init__(self, values: Sequence[float]):
        self.values = np.sort(np.asarray(values, dtype=float))
        if self.values.size == 0:
            raise EmptySample("empirical CDF of an empty sample")

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n


def ks_distance(cdf: EmpiricalCdf, reference: Callable) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_n - F|`` evaluated at the sample points."""
    if cdf.n == 0:
        raise EmptySample("KS distance of an empty sample")
    x = cdf.values
    ref = np.asarray(reference(x), dtype=float) * np.ones_like(x)
    n = cdf.n
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(np.abs(upper - ref)), np.max(np.abs(ref - lower))))


def edelman_cdf(x, symmetry: str):
    """Limiting law of ``N^2 lambda_1`` at ``z = 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("edelman_cdf needs x >= 0")
    if symmetry == COMPLEX:
        val = -np.expm1(-xa)
    elif symmetry == REAL:
        val = -np.expm1(-xa / 2 - np.sqrt(xa))
    else:
        raise DomainError(f"unknown symmetry {symmetry!r}")
    return float(val) if np.ndim(x) == 0 else val


def corollary_bound(x, params: ShiftParams, symmetry: str, *, C: float = BOUND_C):
    """Tail bound shape for ``P(lambda_1 <= c(N, z) x)`` without its constant.

    Complex: ``(1 + |log x|) x``.  Real: ``e^{-N eta^2/2} sqrt(x) + (1 + |log x|) x``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or np.any(xa > C):
        raise DomainError(f"x must lie in (0, {C}]")
    if params.delta <= -C * params.N**-0.5:
        raise DomainError("delta below -C N^(-1/2)")
    base = (1 + np.abs(np.log(xa))) * xa
    if symmetry == REAL:
        base = base + math.exp(-0.5 * params.N * params.eta**2) * np.sqrt(xa)
    elif symmetry != COMPLEX:
        raise DomainError(f"unknown symmetry {symmetry!r}")
    return float(base) if np.ndim(x) == 0 else base


def rescaled_lambda1(samples: Sequence[TailSample], params: ShiftParams) -> np.ndarray:
    """``lambda_1 / c(N, z)``, the canonical tail variable."""
    return np.array([s.lambda1 for s in samples]) / scale_c(params)


def empirical_resolvent_many(
    spec: EnsembleSpec, energies: Sequence[float], side: str = "negative_axis", kappa: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Sample means and standard errors of the resolvent trace at several energies.

    ``side='negative_axis'`` gives ``Tr(Y + E)^{-1}``; ``side='plus_i0'``
    gives ``Tr(Y - E - i kappa)^{-1}`` with an explicit ``kappa > 0``.
    All energies share the same draws.
    """
    E = np.asarray(energies, dtype=float)
    if np.any(E <= 0):
        raise DomainError("energies must be positive")
    if side == "negative_axis":
        shift = -E.astype(complex)
    elif side == "plus_i0":
        if kappa is None or not kappa > 0:
            raise DomainError("plus_i0 sampling needs an explicit kappa > 0")
        shift = E + 1j * kappa
    else:
        raise DomainError(f"unknown side {side!r}")

    def traces(svs):
        return [np.sum(1.0 / (s[:, None] - shift[None, :]), axis=0) for s, _ in svs]

    tr = np.array(_map_batches(spec, traces))
    mean = tr.mean(axis=0)
    n = tr.shape[0]
    stderr = tr.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(E.shape, np.inf)
    return mean, stderr


def empirical_resolvent(
    spec: EnsembleSpec, E: float, side: str = "negative_axis", kappa: float | None = None
) -> tuple[complex, float]:
    """Mean and standard error of the resolvent trace at one energy."""
    mean, se = empirical_resolvent_many(spec, [E], side, kappa)
    return complex(mean[0]), float(np.abs(se[0]))
