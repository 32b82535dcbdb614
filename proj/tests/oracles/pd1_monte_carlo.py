"""Stick-breaking Monte Carlo for PD(1) largest-entry statistics (numpy only)."""
import numpy as np

rng = np.random.default_rng(20261015)
N = 1_000_000
largest = np.zeros(N)
remaining = np.ones(N)
for _ in range(60):
    piece = rng.random(N) * remaining
    largest = np.maximum(largest, piece)
    remaining -= piece
se = largest.std() / np.sqrt(N)
print("mean largest", largest.mean(), "+-", se, "(Golomb-Dickman 0.6243299885)")
for x in (0.5, 0.55, 0.65, 0.75, 0.85, 0.95):
    p = (largest > x).mean()
    print(x, p, "ln(1/x) =", np.log(1 / x), "se", np.sqrt(p * (1 - p) / N))
