"""Quality evaluation of raw detector output and extracted bits.

Covers worst-case (min-) entropy of d-bit words, the consecutive-block
uniformity matrix, the entropy deficit caused by afterpulsing, a
lightweight statistical sanity screen, and export of bit files for an
external statistical test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .combinatorics import binomial
from .errors import DomainError, UnsupportedCaseError
from .extractor import DetectionStream, as_bit_array
from .streamio import write_ascii_bits, write_meta

MAX_WORD_BITS = 16
_UNIFORMITY_MAX_BLOCK = 12  # counts matrix is 4^n cells


def _fold_words(bits: np.ndarray, width: int) -> np.ndarray:
    """Non-overlapping MSB-first ``width``-bit words; partial tail dropped."""
    n_words = bits.size // width
    rows = bits[: n_words * width].reshape(n_words, width)
    acc = rows[:, 0].astype(np.uint16)
    for j in range(1, width):
        acc = (acc << 1) | rows[:, j]
    return acc


def statistical_error_scale(word_bits: int, word_count: int) -> float:
    """Relative per-bin frequency fluctuation: 1/sqrt(words per bin)."""
    if word_count <= 0:
        raise DomainError(f"word_count must be > 0, got {word_count}")
    return math.sqrt((1 << word_bits) / word_count)


@dataclass(frozen=True)
class MinEntropyReport:
    word_bits: int
    word_count: int
    histogram: np.ndarray
    min_entropy: float
    deviation: float  # word_bits - min_entropy
    stat_error_scale: float


def min_entropy(bits, word_bits: int = 8) -> MinEntropyReport:
    """Min-entropy of non-overlapping ``word_bits``-bit words.

    H_inf = -log2(max word frequency); the deviation from ``word_bits``
    measures distance from uniform, to be read against
    ``stat_error_scale`` for the sample size.
    """
    if not (1 <= word_bits <= MAX_WORD_BITS):
        raise DomainError(f"word_bits must be in [1, {MAX_WORD_BITS}], got {word_bits}")
    arr = as_bit_array(bits)
    if arr.size < word_bits:
        raise DomainError(
            f"need at least {word_bits} bits for {word_bits}-bit words, got {arr.size}"
        )
    words = _fold_words(arr, word_bits)
    histogram = np.bincount(words, minlength=1 << word_bits)
    word_count = int(words.size)
    h_inf = -math.log2(histogram.max() / word_count)
    return MinEntropyReport(
        word_bits=word_bits,
        word_count=word_count,
        histogram=histogram,
        min_entropy=h_inf,
        deviation=word_bits - h_inf,
        stat_error_scale=statistical_error_scale(word_bits, word_count),
    )


# ---------------------------------------------------------------------------
# consecutive-block uniformity


@dataclass(frozen=True)
class UniformityMatrix:
    """Counts of disjoint consecutive block-pattern pairs (x then y).

    Patterns index the matrix by their MSB-first window value.  The
    deviations are maxima in units of each cell's own sampling standard
    error, so "looks uniform" reads as a small single number.
    """

    block_len: int
    counts: np.ndarray  # (2^n, 2^n) pair counts
    pair_count: int
    pattern_counts: np.ndarray  # per-pattern block counts over the whole stream
    symmetry_deviation: float  # max |c(x,y)-c(y,x)| / sqrt(c(x,y)+c(y,x))
    independence_deviation: float  # max Pearson residual vs product of marginals
    subblock_max_z: float  # max pairwise count imbalance within an equal-k class


def _pattern_popcounts(n: int) -> np.ndarray:
    return np.array([bin(x).count("1") for x in range(1 << n)], dtype=np.int64)


def k_grouped_order(block_len: int) -> np.ndarray:
    """Pattern permutation sorted by avalanche count then value, the
    conventional axis ordering for displaying the uniformity matrix."""
    k = _pattern_popcounts(block_len)
    return np.lexsort((np.arange(1 << block_len), k))


def uniformity_matrix(stream: DetectionStream, block_len: int = 4) -> UniformityMatrix:
    if not (2 <= block_len <= _UNIFORMITY_MAX_BLOCK):
        raise DomainError(
            f"uniformity matrix supports block lengths 2..{_UNIFORMITY_MAX_BLOCK}"
        )
    windows = stream.windows
    n_blocks = windows.size // block_len
    if n_blocks < 2:
        raise DomainError("need at least two full blocks for pair statistics")
    rows = windows[: n_blocks * block_len].reshape(n_blocks, block_len)
    patterns = rows[:, 0].astype(np.uint16)
    for j in range(1, block_len):
        patterns = (patterns << 1) | rows[:, j]
    size = 1 << block_len
    pattern_counts = np.bincount(patterns, minlength=size).astype(np.int64)

    pairs = patterns[: (n_blocks // 2) * 2].reshape(-1, 2).astype(np.int64)
    joint = pairs[:, 0] * size + pairs[:, 1]
    counts = np.bincount(joint, minlength=size * size).reshape(size, size)
    pair_count = pairs.shape[0]

    diff = np.abs(counts - counts.T)
    tot = counts + counts.T
    with np.errstate(divide="ignore", invalid="ignore"):
        sym_z = np.where(tot > 0, diff / np.sqrt(tot), 0.0)
    symmetry_deviation = float(sym_z.max())

    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    expected = np.outer(row, col) / pair_count
    # Pearson residuals need a few expected counts per cell to be
    # normal-ish; rarely populated cells are excluded from the max
    with np.errstate(divide="ignore", invalid="ignore"):
        ind_z = np.where(expected >= 10, np.abs(counts - expected) / np.sqrt(expected), 0.0)
    independence_deviation = float(ind_z.max())

    ks = _pattern_popcounts(block_len)
    sub_z = 0.0
    for k in range(1, block_len):
        cls = pattern_counts[ks == k]
        for a in range(cls.size):
            for b in range(a + 1, cls.size):
                tot_ab = cls[a] + cls[b]
                if tot_ab:
                    sub_z = max(sub_z, abs(int(cls[a]) - int(cls[b])) / math.sqrt(tot_ab))

    return UniformityMatrix(
        block_len=block_len,
        counts=counts,
        pair_count=pair_count,
        pattern_counts=pattern_counts,
        symmetry_deviation=symmetry_deviation,
        independence_deviation=independence_deviation,
        subblock_max_z=float(sub_z),
    )


# ---------------------------------------------------------------------------
# afterpulse entropy deficit


@dataclass(frozen=True)
class AfterpulseEntropyReport:
    p: float
    taps: tuple[float, ...]
    block_len: int
    k: int
    event_probs: tuple[float, ...]
    conditional_entropy: float
    deficit: float  # log2 C(n, k) - conditional_entropy


def afterpulse_entropy(
    p: float, taps, block_len: int = 4, k: int = 1
) -> AfterpulseEntropyReport:
    """Entropy left in a single-avalanche block when afterpulsing skews it.

    The probability that the lone avalanche sits in window i is
    (1-p)^(i-1) * p * prod_{j=1..n-i} (1 - p - taps[j-1]): gates after
    the avalanche must each stay quiet against their elevated tap
    probability.  The entropy is taken over these probabilities
    normalized within the k = 1 class; the deficit is computed directly
    from the ratios to the uniform distribution, so values as small as
    1e-12 are meaningful.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if k != 1:
        raise UnsupportedCaseError(
            "event probabilities are modeled for single-avalanche blocks only (k = 1)"
        )
    n = block_len
    taps = tuple(float(t) for t in taps)
    if any(t < 0 for t in taps):
        raise DomainError("afterpulse taps must be >= 0")
    padded = taps + (0.0,) * max(0, n - 1 - len(taps))
    if any(p + t > 1.0 for t in padded):
        raise DomainError("p plus tap exceeds 1; event probabilities undefined")
    q = 1.0 - p
    probs = []
    for i in range(1, n + 1):
        prob = q ** (i - 1) * p
        for j in range(1, n - i + 1):
            prob *= q - padded[j - 1]
        probs.append(prob)
    total = math.fsum(probs)
    cond = [x / total for x in probs]
    entropy = -math.fsum(c * math.log2(c) for c in cond if c > 0)
    count = binomial(n, k)
    # sum_i q_i log2(q_i * C): exact cancellation-free form of log2 C - entropy
    deficit = math.fsum(c * math.log1p(count * c - 1.0) for c in cond if c > 0) / math.log(2)
    return AfterpulseEntropyReport(
        p=p,
        taps=taps,
        block_len=n,
        k=k,
        event_probs=tuple(probs),
        conditional_entropy=entropy,
        deficit=deficit,
    )


# ---------------------------------------------------------------------------
# sanity screen and export


@dataclass(frozen=True)
class SanityReport:
    n_bits: int
    monobit_z: float
    runs_z: float
    lag1_z: float
    passed: bool

    def z_scores(self) -> dict[str, float]:
        return {"monobit": self.monobit_z, "runs": self.runs_z, "lag1": self.lag1_z}


def sanity_tests(bits, z_limit: float = 4.0) -> SanityReport:
    """Quick pre-test screen: bit balance, run count, lag-1 correlation.

    Pass means every statistic is within ``z_limit`` standard
    deviations of its ideal; it is a smoke check, not a substitute for
    a full statistical test battery.
    """
    arr = as_bit_array(bits)
    n = int(arr.size)
    if n < 10_000:
        raise DomainError(f"sanity screen needs >= 10000 bits, got {n}")
    ones = int(arr.sum())
    zeros = n - ones
    monobit_z = (2.0 * ones - n) / math.sqrt(n)

    if ones == 0 or zeros == 0:
        runs_z = math.inf
        lag1_z = math.inf
    else:
        runs = 1 + int(np.count_nonzero(arr[1:] != arr[:-1]))
        expected = 1.0 + 2.0 * ones * zeros / n
        variance = (expected - 1.0) * (expected - 2.0) / (n - 1.0)
        runs_z = (runs - expected) / math.sqrt(variance)

        x = arr.astype(np.float64)
        a, b = x[:-1], x[1:]
        cov = float(np.mean(a * b) - a.mean() * b.mean())
        denom = float(a.std() * b.std())
        corr = cov / denom
        lag1_z = corr * math.sqrt(n - 1.0)

    passed = max(abs(monobit_z), abs(runs_z), abs(lag1_z)) < z_limit
    return SanityReport(n, monobit_z, runs_z, lag1_z, passed)


def export_nist(bits, path, fmt: str = "ascii") -> Path:
    """Write bits for the external statistical test suite.

    ``ascii`` writes one '0'/'1' byte per bit; ``packed`` writes
    MSB-first bytes plus a sidecar recording the exact bit count.
    """
    path = Path(path)
    arr = as_bit_array(bits)
    if fmt == "ascii":
        write_ascii_bits(path, arr)
    elif fmt == "packed":
        path.write_bytes(np.packbits(arr).tobytes() if arr.size else b"")
        write_meta(path, {"format": "packed-bits-msb-first", "total_bits": int(arr.size)})
    else:
        raise DomainError(f"unknown export format {fmt!r}")
    return path
