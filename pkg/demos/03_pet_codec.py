"""
Priority encoding transmission
==============================

A progressive bitstream is cut into K equal-size descriptions. Level l of the
layout holds l rows of source bits plus K-l rows of erasure-code parity, so
any l descriptions give back the first xi_l bits.
"""

import itertools

import numpy as np

from jnsc import PetProfile, decode, encode, make_layout

rng = np.random.default_rng(0)
profile = PetProfile((0.82, 0.18, 0.0))
layout = make_layout(profile, n=100)
print("segment widths:", layout.widths, "prefix lengths:", layout.prefix_lengths)

source = rng.integers(0, 2, layout.source_bits, dtype=np.uint8)
descriptions = encode(source, layout, profile)
print("each description carries", descriptions[0].size, "bits")

for size in (1, 2, 3):
    for subset in itertools.combinations((1, 2, 3), size):
        bits = decode({i: descriptions[i - 1] for i in subset}, layout)
        assert np.array_equal(bits, source[:bits.size])
        print(subset, "->", bits.size, "bits")

# a flatter profile buys more source bits when all descriptions arrive
even = PetProfile((1 / 3, 1 / 3, 1 / 3))
print(make_layout(even, 100).prefix_lengths)
