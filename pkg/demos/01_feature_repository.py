"""Tour of the feature repository: dimensions, kinds, and ordinal levels."""

from prefloop import default_repository, nearest_level, normalize_ordinal_level
from prefloop.repository import FeatureKind

repo = default_repository()
print(f"repository v{repo.version}: {len(repo)} features, {len(repo.dimensions)} dimensions\n")

for dimension in repo.dimensions:
    features = [f for f in repo.all_features() if f.dimension == dimension]
    print(f"{dimension}:")
    for spec in features:
        if spec.kind is FeatureKind.FREEFORM:
            print(f"  {spec.id:<20} free-form")
        elif spec.kind is FeatureKind.ORDINAL:
            print(f"  {spec.id:<20} ordinal   {' -> '.join(spec.values)}")
        else:
            print(f"  {spec.id:<20} discrete  {' | '.join(spec.values)}")
print()

# Ordinal values live on a normalized [0, 1] scale, equally spaced.
brightness = repo.get("brightness")
for value in brightness.values:
    print(f"brightness {value:<9} -> {normalize_ordinal_level(brightness, value):.3f}")

# Continuous points map back to the nearest level.
for x in (0.0, 0.4, 0.9):
    print(f"nearest level to {x}: {nearest_level(brightness, x)}")

# Exact midpoints break toward the lower level: saturation has levels
# {0, 0.5, 1}, so 0.25 is equidistant between desaturated and muted.
saturation = repo.get("saturation")
print(f"nearest level to 0.25: {nearest_level(saturation, 0.25)} (tie breaks down)")
