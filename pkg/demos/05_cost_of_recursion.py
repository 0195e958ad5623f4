"""Score-query budgets: the recursive Monte Carlo estimator against dilation."""

from anneal_path import bench
from anneal_path.paths import RecursiveCostModel

models = [RecursiveCostModel(10, 100, windows) for windows in range(1, 6)]
rows = bench.estimate_mc_cost(models, dilation_iterations=10_000, dilation_particles=1000)
print(bench.cost_table_csv(rows))
