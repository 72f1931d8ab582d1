"""Quality checks on raw blocks and extracted bits.

The drifting source leaves two very different objects: raw block
patterns, whose statistics drift with p(t), and the extracted bit
stream, which should be indistinguishable from fair coin flips.  The
uniformity matrix looks at raw consecutive-block pairs; min-entropy and
the sanity screen look at the bits.
"""

import numpy as np

from timebinrng import (
    export_nist,
    extract,
    k_grouped_order,
    min_entropy,
    preset,
    sanity_tests,
    simulate,
    statistical_error_scale,
    uniformity_matrix,
    SourceModel,
)

SEED = 17

# --- raw-block uniformity on a steady source ------------------------------
# A biased p makes the structure visible: pattern probability depends
# only on k, so same-(k1, k2) cells are equal while classes differ.
model = SourceModel(mean_photons=-np.log(1 - 0.35))  # constant p = 0.35
stream = simulate(model, 8_000_000, SEED)
rep = uniformity_matrix(stream, 4)
print(f"uniformity over {rep.pair_count} disjoint block pairs (IID p = 0.35):")
print(f"  symmetry deviation     {rep.symmetry_deviation:.2f} sigma")
print(f"  independence deviation {rep.independence_deviation:.2f} sigma")
print(f"  same-k imbalance       {rep.subblock_max_z:.2f} sigma")
print()

# Rendered with patterns grouped by avalanche count, the pair-count
# matrix is block-constant: every same-(k1, k2) cell holds the same
# population up to noise, stepping down as k1 + k2 grows.
order = k_grouped_order(4)
grouped = rep.counts[np.ix_(order, order)]
print("pair counts (rows/cols sorted by k; 16 x 16, thousands):")
for row in grouped:
    print(" ".join(f"{c/1000:5.1f}" for c in row))
print()

# --- extracted bits from the drifting scenario ----------------------------
(model_a,) = preset("a")
bits = extract(simulate(model_a, 8_000_000, SEED)).bit_array()
print(f"extracted {bits.size} bits from the drifting source")

for d in (1, 4, 8):
    mrep = min_entropy(bits, d)
    print(
        f"  d={d}: H_inf = {mrep.min_entropy:.5f} "
        f"(deviation {mrep.deviation:.2e}, "
        f"scale {statistical_error_scale(d, mrep.word_count):.2e})"
    )

srep = sanity_tests(bits)
print(
    f"  sanity screen: monobit z={srep.monobit_z:+.2f}, runs z={srep.runs_z:+.2f}, "
    f"lag1 z={srep.lag1_z:+.2f} -> {'pass' if srep.passed else 'FAIL'}"
)
print()

# --- export for the external statistical test suite -----------------------
ascii_path = export_nist(bits, "/tmp/timebinrng_demo_bits.txt", "ascii")
packed_path = export_nist(bits, "/tmp/timebinrng_demo_bits.bin", "packed")
print(f"wrote {ascii_path} (one character per bit)")
print(f"wrote {packed_path} (+ sidecar with the exact bit count)")
