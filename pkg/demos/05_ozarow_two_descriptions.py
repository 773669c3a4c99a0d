"""
Two balanced descriptions versus one shared one
===============================================

On the diamond network with link capacity C, separate coding multicasts a
single description at rate C and every sink sees 2^(-2C). Two balanced
descriptions let the bottom sinks combine both. The ratio of the best
average distortion to the separate-coding one stays below one.
"""

from jnsc.experiments import run_ozarow_sweep

for row in run_ozarow_sweep(0.25, 3.0, 0.25):
    bar = "#" * int(60 * row["ratio"])
    print(f"C={row['C']:.2f} ratio={row['ratio']:.4f} {bar}")
