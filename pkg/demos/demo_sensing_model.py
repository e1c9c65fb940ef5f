#!/usr/bin/env python3
"""Walk through the sensing model: grids, region actions, noisy observations.

Run:  python3 demos/demo_sensing_model.py
"""

import numpy as np

from activesearch import (
    GridShape,
    NoiseModel,
    enumerate_actions,
    generate_signal,
    observe,
    to_dense,
)

rng = np.random.default_rng(0)

# A 2-D grid, flattened row-major into a length-128 vector.
shape = GridShape([8, 16])
print(f"grid {shape} -> n = {shape.n} cells")

# The ground truth is k-sparse with unit spikes.
signal = generate_signal(shape, k=5, rng=rng)
print("target cells:", sorted(signal.support))

# Actions are contiguous rectangles with unit sensing power: the weight is
# 1/sqrt(area), so a bigger footprint reads a fainter average.
actions = enumerate_actions(shape, "dyadic")
print(f"dyadic action set size: {len(actions)} (= (2*8-1)*(2*16-1))")

for a in (actions[0], actions[len(actions) // 2], actions[-1]):
    x = to_dense(a, shape)
    print(
        f"action offset={a.offset} extent={a.extent} weight={a.weight:.3f} "
        f"|x|_2={np.linalg.norm(x):.6f}"
    )

# Observations are y = x' beta + eps.  Noiseless readings are exact averages.
full = actions[-1]
print("\nnoiseless full-grid reading:",
      observe(signal, full, NoiseModel(0.0), rng, shape),
      "= k * w =", signal.k * full.weight)

noisy = [observe(signal, full, NoiseModel(1.0), rng, shape) for _ in range(5)]
print("five noisy full-grid readings:", np.round(noisy, 3))
