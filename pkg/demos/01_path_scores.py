"""How the four paths see the same mixture at an intermediate level.

Prints the score of each path at a handful of points, then shows the
dilation score as the limit of the exact convolutional path when the
proposal's variance shrinks to zero.
"""

import numpy as np

from anneal_path import GaussianMixture, GaussianParams, MCEstimatorConfig, PathScore, convolutional_gmm_path

target = GaussianMixture.from_arrays(
    [0.25, 0.25, 0.5],
    [[-4.0, 0.0], [4.0, 0.0], [0.0, 5.0]],
    [1.0, 1.0, [[2.0, 0.5], [0.5, 1.0]]],
)
proposal = GaussianParams(np.zeros(2), 1.0)
points = np.array([[0.0, 0.0], [1.0, 1.0], [-2.0, 3.0]])
lam = 0.3

paths = {
    "dilation": PathScore("dilation", target),
    "geometric": PathScore("geometric", target, proposal),
    "convolutional_exact_gmm": PathScore("convolutional_exact_gmm", target, proposal),
    "convolutional_mc": PathScore("convolutional_mc", target, inner=MCEstimatorConfig(n_samples=2000, n_iter=100)),
}
rng = np.random.default_rng(0)
print(f"scores at lambda = {lam}")
for name, path in paths.items():
    s = path(points, lam, rng)
    print(f"  {name:>24s}: " + "  ".join(f"({a:+7.3f}, {b:+7.3f})" for a, b in s))

# the Monte Carlo estimate is biased here: its inner chains barely move between modes
exact = paths["convolutional_exact_gmm"](points, lam)
mc = paths["convolutional_mc"](points, lam, rng)
print("max |exact - mc| =", float(np.max(np.abs(exact - mc))))

# shrink the proposal: the convolutional path tends to the dilation path
print("\nconvolutional path with a shrinking proposal vs dilation")
for var in (1.0, 1e-2, 1e-4, 1e-8, 1e-12):
    conv = convolutional_gmm_path(target, GaussianParams(np.zeros(2), var), lam).score(points)
    dil = paths["dilation"](points, lam)
    rel = np.linalg.norm(conv - dil) / np.linalg.norm(dil)
    print(f"  proposal variance {var:8.0e}: relative gap {rel:.2e}")
