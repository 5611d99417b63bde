"""The three sampling strategies that turn statistics into feature bundles."""

import collections

import numpy as np

from prefloop import (
    CreativeMaterialsPool,
    SamplingConfig,
    default_repository,
    gaussian_sample_ordinal,
    pool_sample,
    roulette_sample,
)

repo = default_repository()
cfg = SamplingConfig()
rng = np.random.default_rng(0)

# Fitness-proportionate selection over odds ratios: strong preferences
# dominate without extinguishing the rest.
odds = {"realistic": 6.0, "illustration": 2.0, "cartoon": 1.0, "watercolor": 1.0}
draws = collections.Counter(roulette_sample(odds, rng) for _ in range(10_000))
total_or = sum(odds.values())
print("roulette over", odds)
for value, ratio in odds.items():
    print(f"  {value:<13} expected {ratio / total_or:.3f}  observed {draws[value] / 10_000:.3f}")

# Ordinal features sample a truncated Gaussian around the liked-group mean,
# then snap to the nearest level.
brightness = repo.get("brightness")
for mu in (0.9, 0.5, 0.05):
    picks = collections.Counter(
        gaussian_sample_ordinal(brightness, mu, cfg, rng) for _ in range(5000)
    )
    top = picks.most_common(2)
    print(f"gaussian around mu={mu}: {dict(top)}")

# Free-form texts from liked images are pooled and sampled per category.
pool = CreativeMaterialsPool()
pool.add("overall_impression", "a dreamy, ethereal portrait", 1)
pool.add("overall_impression", "stark minimalist mood", 2)
pool.add("unique_elements", "glowing particles", 1)
pool.add("dominant_color", "soft pink, lavender, cream", 2)
print("\npool picks:", pool_sample(pool, cfg, rng))
