"""Detection-stream to random-bit extraction.

The stream of gate-window outcomes is cut into consecutive,
non-overlapping blocks of ``block_len`` windows.  Each block is reduced
to the positions of its avalanches, ranked to an integer f in
[0, C(n,k)), and f is emitted as a fixed-width bit fragment chosen by
the power-of-two subblock (Elias) expansion of C(n, k):

* k = 0 or k = n            -> no fragment (single-outcome block),
* f below the leading power -> f as a ``leading``-bit fragment,
* otherwise                 -> offset of f inside its subblock, at that
                               subblock's width; width-0 subblocks are
                               dropped.

Every fragment value is uniform over its width whenever all C(n,k)
position patterns are equally likely, which holds whenever the click
probability is constant within one block.  Nothing else about the
stream enters the output, so slow drift between blocks cannot bias it.

Fragments and bytes are packed most-significant-bit first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .combinatorics import (
    MAX_BLOCK_LEN,
    Combination,
    binary_expansion,
    binomial,
    rank_combination,
)
from .errors import DomainError

# largest block length served by the pattern lookup table; longer blocks
# use the per-k ranking path
_LUT_MAX = 16

MERGE_POLICIES = ("per-channel", "round-robin-block")
OUTPUT_FORMATS = ("packed", "ascii")


# ---------------------------------------------------------------------------
# domain types


@dataclass
class DetectionStream:
    """Ordered gate-window outcomes of one detector channel.

    ``windows`` is a 0/1 array, one entry per gate window, 1 meaning an
    avalanche fired in that window.
    """

    windows: np.ndarray
    channel_id: int = 0
    window_period: float = 1e-6  # seconds per gate window

    def __post_init__(self):
        self.windows = as_bit_array(self.windows)
        if self.channel_id < 0:
            raise DomainError(f"channel_id must be >= 0, got {self.channel_id}")
        if not self.window_period > 0:
            raise DomainError(f"window_period must be > 0, got {self.window_period}")

    def __len__(self) -> int:
        return len(self.windows)


@dataclass(frozen=True)
class BlockOutcome:
    """One block's avalanche-position pattern and its ordinal in the stream."""

    combination: Combination
    block_index: int


@dataclass(frozen=True)
class BitFragment:
    """A ``bit_length``-wide unsigned value destined for the output stream."""

    value: int
    bit_length: int

    def __post_init__(self):
        if self.bit_length < 1:
            raise DomainError(f"bit_length must be >= 1, got {self.bit_length}")
        if not (0 <= self.value < (1 << self.bit_length)):
            raise DomainError(
                f"value {self.value} does not fit in {self.bit_length} bits"
            )

    @property
    def bits(self) -> str:
        return format(self.value, f"0{self.bit_length}b")


@dataclass
class ExtractStats:
    windows_seen: int = 0
    blocks_scanned: int = 0
    blocks_discarded_k0_kn: int = 0
    fragments_discarded_alpha0: int = 0
    bits_emitted: int = 0

    def add(self, other: "ExtractStats") -> None:
        self.windows_seen += other.windows_seen
        self.blocks_scanned += other.blocks_scanned
        self.blocks_discarded_k0_kn += other.blocks_discarded_k0_kn
        self.fragments_discarded_alpha0 += other.fragments_discarded_alpha0
        self.bits_emitted += other.bits_emitted


@dataclass
class BitOutput:
    """Packed extractor output: MSB-first bytes plus the true bit count."""

    data: bytes
    total_bits: int
    stats: ExtractStats

    def bit_array(self) -> np.ndarray:
        """Unpacked 0/1 view of the output."""
        return unpack_bits(self.data, self.total_bits)

    def ascii_bits(self) -> str:
        return "".join("1" if b else "0" for b in self.bit_array())


@dataclass
class ExtractorConfig:
    block_len: int = 4
    output_format: str = "packed"
    merge_policy: str = "round-robin-block"

    def __post_init__(self):
        if not (2 <= self.block_len <= MAX_BLOCK_LEN):
            raise DomainError(
                f"block_len must be in [2, {MAX_BLOCK_LEN}], got {self.block_len}"
            )
        if self.output_format not in OUTPUT_FORMATS:
            raise DomainError(f"unknown output format {self.output_format!r}")
        if self.merge_policy not in MERGE_POLICIES:
            raise DomainError(f"unknown merge policy {self.merge_policy!r}")


@dataclass
class FragmentStream:
    """Column representation of one channel's fragments, in block order."""

    values: np.ndarray  # int64 fragment values
    lengths: np.ndarray  # uint8 fragment widths, all >= 1
    block_index: np.ndarray  # int64 ordinal of the source block
    channel_id: int
    stats: ExtractStats


# ---------------------------------------------------------------------------
# bit-level helpers


def as_bit_array(windows) -> np.ndarray:
    """Coerce to a 1-D uint8 array of 0/1 values."""
    arr = np.asarray(windows)
    if arr.ndim != 1:
        raise DomainError(f"expected a 1-D window sequence, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        if arr.size and arr.max() > 1:
            raise DomainError("window values must be 0 or 1")
        return arr
    if arr.dtype == np.bool_:
        return arr.view(np.uint8)
    out = (arr != 0).astype(np.uint8)
    return out


def fragments_to_bit_array(values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Expand fragments to their MSB-first bit sequence, concatenated."""
    lengths = lengths.astype(np.int64, copy=False)
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.uint8)
    ends = np.cumsum(lengths)
    starts = ends - lengths
    offset = np.arange(total, dtype=np.int64) - np.repeat(starts, lengths)
    shift = np.repeat(lengths, lengths) - 1 - offset
    bits = (np.repeat(values.astype(np.int64, copy=False), lengths) >> shift) & 1
    return bits.astype(np.uint8)


def unpack_bits(data: bytes, total_bits: int) -> np.ndarray:
    buf = np.frombuffer(data, dtype=np.uint8)
    if total_bits > 8 * buf.size:
        raise DomainError(f"{total_bits} bits do not fit in {buf.size} bytes")
    return np.unpackbits(buf)[:total_bits]


class BitPacker:
    """Accumulates 0/1 arrays into an MSB-first packed byte string.

    Feeding the same bits in any chunking yields identical bytes.
    """

    def __init__(self):
        self._full: list[bytes] = []
        self._tail = np.zeros(0, dtype=np.uint8)  # < 8 pending bits
        self.bit_length = 0

    def add(self, bits: np.ndarray) -> None:
        if bits.size == 0:
            return
        self.bit_length += int(bits.size)
        pending = np.concatenate([self._tail, bits]) if self._tail.size else bits
        cut = (pending.size // 8) * 8
        if cut:
            self._full.append(np.packbits(pending[:cut]).tobytes())
        self._tail = pending[cut:]

    def add_fragments(self, values: np.ndarray, lengths: np.ndarray) -> None:
        self.add(fragments_to_bit_array(values, lengths))

    def getvalue(self) -> bytes:
        out = b"".join(self._full)
        if self._tail.size:
            out += np.packbits(self._tail).tobytes()
        return out


def pack_bits(fragments: Iterable[BitFragment]) -> tuple[bytes, int]:
    """Concatenate fragments MSB-first into zero-padded bytes.

    Returns the packed bytes and the true bit count.
    """
    frags = list(fragments)
    if not frags:
        return b"", 0
    values = np.array([f.value for f in frags], dtype=np.int64)
    lengths = np.array([f.bit_length for f in frags], dtype=np.int64)
    bits = fragments_to_bit_array(values, lengths)
    return np.packbits(bits).tobytes(), int(bits.size)


# ---------------------------------------------------------------------------
# scalar block path


def scan_blocks(stream: DetectionStream, block_len: int) -> Iterator[BlockOutcome]:
    """Yield consecutive non-overlapping blocks; a trailing partial block
    is dropped."""
    if not (2 <= block_len <= MAX_BLOCK_LEN):
        raise DomainError(f"block_len must be in [2, {MAX_BLOCK_LEN}], got {block_len}")
    windows = stream.windows
    for b in range(len(windows) // block_len):
        chunk = windows[b * block_len : (b + 1) * block_len]
        positions = tuple(int(i) + 1 for i in np.nonzero(chunk)[0])
        yield BlockOutcome(Combination(block_len, len(positions), positions), b)


def encode_block(outcome: BlockOutcome) -> BitFragment | None:
    """Encode one block; ``None`` means the block is discarded.

    Discards happen for k = 0 and k = n (single-outcome blocks) and for
    ranks landing in a width-0 subblock of the expansion of C(n, k).
    """
    c = outcome.combination
    if c.k == 0 or c.k == c.n:
        return None
    f = rank_combination(c)
    expansion = binary_expansion(c.n, c.k)
    start = 0
    for width in expansion.exponents:
        size = 1 << width
        if f < start + size:
            if width == 0:
                return None
            return BitFragment(f - start, width)
        start += size
    raise AssertionError("rank exceeds C(n, k)")  # unreachable for valid outcomes


# ---------------------------------------------------------------------------
# vectorized block codec


class _BlockCodec:
    """Precomputed tables for encoding many blocks of one length at once."""

    def __init__(self, block_len: int):
        if not (2 <= block_len <= MAX_BLOCK_LEN):
            raise DomainError(
                f"block_len must be in [2, {MAX_BLOCK_LEN}], got {block_len}"
            )
        n = block_len
        self.n = n
        # choose[a, b] = C(a, b), zero where b > a; fits int64 for n <= 64
        choose = np.zeros((n + 1, n + 1), dtype=np.int64)
        for a in range(n + 1):
            for b in range(a + 1):
                choose[a, b] = binomial(a, b)
        self.choose = choose
        # per k: subblock start offsets (ascending) and widths (descending)
        self.thresholds: dict[int, np.ndarray] = {}
        self.widths: dict[int, np.ndarray] = {}
        for k in range(1, n):
            exps = binary_expansion(n, k).exponents
            sizes = np.array([1 << e for e in exps], dtype=np.int64)
            self.thresholds[k] = np.concatenate([[0], np.cumsum(sizes)[:-1]])
            self.widths[k] = np.array(exps, dtype=np.int64)
        self._lut = self._build_lut() if n <= _LUT_MAX else None

    def _build_lut(self):
        n = self.n
        patterns = np.arange(1 << n, dtype=np.int64)
        windows = (
            (patterns[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
        ).astype(np.uint8)
        lengths, values, _, _ = self._encode_rows(windows)
        return values.astype(np.int64), lengths.astype(np.int8)

    def _encode_rows(self, rows: np.ndarray):
        """Encode a (M, n) 0/1 matrix.

        Returns per-row fragment lengths (-1 = k-discard, 0 = zero-width
        subblock discard), values, and the two discard counts.
        """
        n = self.n
        m_rows = rows.shape[0]
        lengths = np.full(m_rows, -1, dtype=np.int64)
        values = np.zeros(m_rows, dtype=np.int64)
        k_all = rows.sum(axis=1, dtype=np.int64)
        k_discards = int(np.count_nonzero((k_all == 0) | (k_all == n)))
        a0_discards = 0
        for k in range(1, n):
            sel = np.nonzero(k_all == k)[0]
            if sel.size == 0:
                continue
            _, cols = np.nonzero(rows[sel])
            cols = cols.reshape(sel.size, k)
            terms = self.choose[n - 1 - cols, (k - np.arange(k))[None, :]]
            f = terms.sum(axis=1)
            thr = self.thresholds[k]
            sub = np.searchsorted(thr, f, side="right") - 1
            w = self.widths[k][sub]
            lengths[sel] = w
            values[sel] = f - thr[sub]
            a0_discards += int(np.count_nonzero(w == 0))
        return lengths, values, k_discards, a0_discards

    def encode(self, windows: np.ndarray, base_block: int = 0):
        """Encode a window array whose length is a multiple of ``n``.

        Returns (values, lengths, block_index, stats) with discarded
        blocks removed from the fragment columns.
        """
        n = self.n
        n_blocks = windows.size // n
        stats = ExtractStats(windows_seen=int(windows.size), blocks_scanned=n_blocks)
        if n_blocks == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.astype(np.uint8), empty, stats
        rows = windows[: n_blocks * n].reshape(n_blocks, n)
        if self._lut is not None:
            patterns = rows[:, 0].astype(np.uint16)
            for j in range(1, n):
                patterns = (patterns << 1) | rows[:, j]
            lut_values, lut_lengths = self._lut
            lengths = lut_lengths[patterns].astype(np.int64)
            values = lut_values[patterns]
            stats.blocks_discarded_k0_kn = int(np.count_nonzero(lengths < 0))
            stats.fragments_discarded_alpha0 = int(np.count_nonzero(lengths == 0))
        else:
            lengths, values, kd, a0 = self._encode_rows(rows)
            stats.blocks_discarded_k0_kn = kd
            stats.fragments_discarded_alpha0 = a0
        keep = lengths > 0
        block_idx = np.nonzero(keep)[0].astype(np.int64) + base_block
        out_lengths = lengths[keep].astype(np.uint8)
        out_values = values[keep]
        stats.bits_emitted = int(out_lengths.sum())
        return out_values, out_lengths, block_idx, stats


@lru_cache(maxsize=None)
def _codec(block_len: int) -> _BlockCodec:
    return _BlockCodec(block_len)


# ---------------------------------------------------------------------------
# extraction drivers


class StreamingExtractor:
    """Chunked extraction with remainder carry.

    Feeding a stream in any chunking produces output bit-identical to a
    single :func:`extract` call on the concatenated windows.
    """

    def __init__(self, block_len: int = 4):
        self._codec = _codec(block_len)
        self._remainder = np.zeros(0, dtype=np.uint8)
        self._packer = BitPacker()
        self._blocks_done = 0
        self.stats = ExtractStats()

    @property
    def block_len(self) -> int:
        return self._codec.n

    def feed(self, windows) -> None:
        arr = as_bit_array(windows)
        self.stats.windows_seen += int(arr.size)
        if self._remainder.size:
            arr = np.concatenate([self._remainder, arr])
        n = self._codec.n
        usable = (arr.size // n) * n
        values, lengths, _, chunk_stats = self._codec.encode(
            arr[:usable], base_block=self._blocks_done
        )
        self._blocks_done += chunk_stats.blocks_scanned
        self.stats.blocks_scanned += chunk_stats.blocks_scanned
        self.stats.blocks_discarded_k0_kn += chunk_stats.blocks_discarded_k0_kn
        self.stats.fragments_discarded_alpha0 += chunk_stats.fragments_discarded_alpha0
        self.stats.bits_emitted += chunk_stats.bits_emitted
        self._packer.add_fragments(values, lengths)
        self._remainder = arr[usable:].copy()

    def finish(self) -> BitOutput:
        """Close the stream; a pending partial block is dropped."""
        return BitOutput(self._packer.getvalue(), self._packer.bit_length, self.stats)


def extract(stream: DetectionStream, config: ExtractorConfig | None = None) -> BitOutput:
    """One-shot extraction of a whole detection stream."""
    config = config or ExtractorConfig()
    ex = StreamingExtractor(config.block_len)
    ex.feed(stream.windows)
    return ex.finish()


def extract_fragments(stream: DetectionStream, block_len: int = 4) -> FragmentStream:
    """Extract one channel, keeping per-fragment columns for merging."""
    codec = _codec(block_len)
    arr = stream.windows
    usable = (arr.size // block_len) * block_len
    values, lengths, block_idx, stats = codec.encode(arr[:usable])
    stats.windows_seen = int(arr.size)
    return FragmentStream(values, lengths, block_idx, stream.channel_id, stats)


def merge_channels(
    channels: Sequence[FragmentStream], policy: str = "round-robin-block"
) -> BitOutput:
    """Combine per-channel fragment streams into one bit output.

    ``round-robin-block`` orders fragments by (block index, channel id);
    ``per-channel`` concatenates whole channels in the given order.
    Both orderings are deterministic.
    """
    if policy not in MERGE_POLICIES:
        raise DomainError(f"unknown merge policy {policy!r}")
    if len(channels) == 0:
        raise DomainError("merge_channels needs at least one channel")
    values = np.concatenate([ch.values for ch in channels])
    lengths = np.concatenate([ch.lengths for ch in channels])
    if policy == "round-robin-block":
        blocks = np.concatenate([ch.block_index for ch in channels])
        chans = np.concatenate(
            [np.full(ch.values.size, ch.channel_id, dtype=np.int64) for ch in channels]
        )
        order = np.lexsort((chans, blocks))
        values = values[order]
        lengths = lengths[order]
    stats = ExtractStats()
    for ch in channels:
        stats.add(ch.stats)
    bits = fragments_to_bit_array(values, lengths)
    return BitOutput(np.packbits(bits).tobytes() if bits.size else b"", int(bits.size), stats)


class StreamingMerger:
    """Chunked multi-channel extraction and merge.

    Every :meth:`feed` must supply one equal-length window chunk per
    channel so the channels' block ranges stay aligned; the merged
    output is then bit-identical to a one-shot :func:`merge_channels`
    over the full streams.
    """

    def __init__(self, block_len: int, n_channels: int, policy: str = "round-robin-block"):
        if policy not in MERGE_POLICIES:
            raise DomainError(f"unknown merge policy {policy!r}")
        if n_channels < 1:
            raise DomainError("need at least one channel")
        self._codec = _codec(block_len)
        self._policy = policy
        self._nch = n_channels
        self._remainders = [np.zeros(0, dtype=np.uint8) for _ in range(n_channels)]
        self._blocks_done = [0] * n_channels
        self._packer = BitPacker()
        # per-channel packers for the per-channel policy
        self._channel_packers = [BitPacker() for _ in range(n_channels)]
        self.stats = ExtractStats()

    def feed(self, per_channel_windows: Sequence[np.ndarray]) -> None:
        if len(per_channel_windows) != self._nch:
            raise DomainError(
                f"expected {self._nch} channel chunks, got {len(per_channel_windows)}"
            )
        n = self._codec.n
        chunk_cols = []
        for ch, win in enumerate(per_channel_windows):
            arr = as_bit_array(win)
            self.stats.windows_seen += int(arr.size)
            if self._remainders[ch].size:
                arr = np.concatenate([self._remainders[ch], arr])
            usable = (arr.size // n) * n
            values, lengths, blocks, st = self._codec.encode(
                arr[:usable], base_block=self._blocks_done[ch]
            )
            self._blocks_done[ch] += st.blocks_scanned
            self.stats.blocks_scanned += st.blocks_scanned
            self.stats.blocks_discarded_k0_kn += st.blocks_discarded_k0_kn
            self.stats.fragments_discarded_alpha0 += st.fragments_discarded_alpha0
            self.stats.bits_emitted += st.bits_emitted
            self._remainders[ch] = arr[usable:].copy()
            chunk_cols.append((values, lengths, blocks, ch))
        if self._policy == "per-channel":
            for values, lengths, _, ch in chunk_cols:
                self._channel_packers[ch].add_fragments(values, lengths)
            return
        if min(self._blocks_done) != max(self._blocks_done):
            raise DomainError("channel chunks must cover equal window counts")
        values = np.concatenate([c[0] for c in chunk_cols])
        lengths = np.concatenate([c[1] for c in chunk_cols])
        blocks = np.concatenate([c[2] for c in chunk_cols])
        chans = np.concatenate(
            [np.full(c[0].size, c[3], dtype=np.int64) for c in chunk_cols]
        )
        order = np.lexsort((chans, blocks))
        self._packer.add_fragments(values[order], lengths[order])

    def finish(self) -> BitOutput:
        if self._policy == "per-channel":
            for p in self._channel_packers:
                self._packer.add(unpack_bits(p.getvalue(), p.bit_length))
        return BitOutput(self._packer.getvalue(), self._packer.bit_length, self.stats)
