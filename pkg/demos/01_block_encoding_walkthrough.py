"""Walk through the block encoding by hand.

A detector stream is just 0/1 gate outcomes.  Group them into blocks of
four windows: with k avalanches in a block, all C(4, k) position
patterns are equally likely, so the pattern's rank is a uniform number
in [0, C(4,k)).  Ranks are then re-emitted as fixed-width bit fragments
through the power-of-two subblock split of C(4, k); blocks with k = 0
or k = 4 say nothing and are dropped.
"""

import numpy as np

from timebinrng import (
    Combination,
    DetectionStream,
    ExtractorConfig,
    binary_expansion,
    binomial,
    encode_block,
    extract,
    rank_combination,
    scan_blocks,
)
from timebinrng.extractor import BlockOutcome

# Eight windows: an avalanche in window 1, then one in windows 5 and 6.
stream = DetectionStream(np.array([1, 0, 0, 0, 1, 1, 0, 0], dtype=np.uint8))

print("stream windows:", stream.windows.tolist())
print()

for block in scan_blocks(stream, 4):
    c = block.combination
    frag = encode_block(block)
    rank = rank_combination(c) if 0 < c.k < c.n else None
    exps = binary_expansion(c.n, c.k).exponents if 0 < c.k < c.n else None
    print(f"block {block.block_index}: positions {c.positions} (k={c.k})")
    print(f"  C(4,{c.k}) = {binomial(4, c.k)} splits into powers {exps}")
    print(f"  rank = {rank} -> fragment {frag.bits!r} ({frag.bit_length} bit)")
print()

out = extract(stream, ExtractorConfig(block_len=4))
print(f"extracted bit string: {out.ascii_bits()!r}")
print(f"stats: {out.stats}")
print()

# The complete picture for block length 4: every pattern and its fate.
print("pattern  k  rank  fragment")
for x in range(16):
    windows = tuple((x >> (3 - j)) & 1 for j in range(4))
    positions = tuple(i + 1 for i, b in enumerate(windows) if b)
    k = len(positions)
    block = BlockOutcome(Combination(4, k, positions), 0)
    frag = encode_block(block)
    rank = rank_combination(block.combination) if 0 < k < 4 else "-"
    emitted = frag.bits if frag else "(discarded)"
    print(f"{''.join(map(str, windows))}     {k}  {rank!s:>4}  {emitted}")
