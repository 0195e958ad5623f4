"""The diagnostic suite on clouds with known answers."""

import numpy as np

from anneal_path import GaussianMixture, MetricConfig, knn_kl, ksd, mmd, mms, sinkhorn_w2

rng = np.random.default_rng(0)
ref = rng.normal(size=(2000, 2))
near = rng.normal(size=(2000, 2))
far = rng.normal(2.0, 1.0, size=(2000, 2))

print("kernel Stein discrepancy against N(0, I)")
print("  exact draws  ", round(ksd(near, lambda x: -x), 4))
print("  shifted draws", round(ksd(far, lambda x: -x), 4))
# a single particle at the mode leaves only the trace term, 2 * beta * d = d
print("  one particle at 0 (squared)", ksd(np.zeros((1, 2)), lambda x: -x) ** 2)

# squared estimates below zero are clamped, so two draws of one law often give exactly 0
print("MMD")
print("  same set     ", mmd(ref, ref))
print("  exact draws  ", round(mmd(near, ref), 4))
print("  shifted draws", round(mmd(far, ref), 4))

# KL(N(0, I) || N(m, I)) = |m|^2 / 2 = 4 for m = (2, 2)
est = knn_kl(near, far)
print(f"k-NN KL        {est.kl:.3f} (exact 4.0), reverse {est.rev_kl:.3f}")

res = sinkhorn_w2(ref, ref + [3.0, 4.0], MetricConfig(ot_epsilon=0.05))
print(f"Sinkhorn W2    {res.value:.3f} for a (3, 4) translation; converged={res.converged} after {res.n_iter} sweeps")

modes = GaussianMixture.from_arrays(np.full(4, 0.25), [[-5, -5], [-5, 5], [5, -5], [5, 5]], [1.0] * 4)
balanced = np.repeat(modes.means, 250, axis=0)
collapsed = np.repeat(modes.means[:1], 1000, axis=0)
print(f"MMS            balanced {mms(balanced, modes):.1f}, collapsed {mms(collapsed, modes):.1f}")
