"""How like/dislike feedback turns into odds ratios and effect sizes.

Walks one hand-built feedback round through the statistical core, then a
second round to show entropy-weighted accumulation and conflicting-signal
attribution.
"""

from prefloop import (
    Annotation,
    FeedbackRound,
    PreferenceState,
    cohens_d_round,
    default_repository,
    entropy_weight,
    preference_snapshot,
    round_contingency,
    round_odds_ratio,
)
from prefloop.profiles import ImageFeatureProfile
from prefloop.repository import FeatureKind

repo = default_repository()


def profile(image_id, **values):
    discrete, ordinal, freeform = {}, {}, {}
    for spec in repo.all_features():
        if spec.kind is FeatureKind.FREEFORM:
            freeform[spec.id] = values.get(spec.id, [])
        elif spec.kind is FeatureKind.ORDINAL:
            ordinal[spec.id] = values.get(spec.id, spec.values[0])
        else:
            discrete[spec.id] = values.get(spec.id, spec.values[0])
    return ImageFeatureProfile(image_id, discrete, ordinal, freeform)


# Round 1: the user likes two cartoon images and dislikes two realistic ones.
liked = [
    profile("a", artistic_style="cartoon", brightness="bright",
            raw_description=["a playful cartoon scene"]),
    profile("b", artistic_style="cartoon", brightness="high_key"),
]
disliked = [
    profile("c", artistic_style="realistic", brightness="dark"),
    profile("d", artistic_style="realistic", brightness="dim"),
]
round1 = FeedbackRound(1, [(p, Annotation.LIKED) for p in liked]
                          + [(p, Annotation.DISLIKED) for p in disliked])

cells = round_contingency(round1, repo, "artistic_style", "cartoon")
print("cartoon 2x2 cells (liked-present, disliked-present, liked-absent, disliked-absent):",
      cells.as_tuple())
print("round odds ratio:", round_odds_ratio(cells))
print("occurrence rate 0.5 carries full weight:", entropy_weight(0.5))
print("one-sided occurrence carries none:", entropy_weight(1.0))

# Brightness separates the groups strongly; the effect size says how strongly.
print("\nround effect size for brightness:",
      round(cohens_d_round([2 / 3, 1.0], [0.0, 1 / 3]), 3))

state = PreferenceState(repo)
state.ingest_round(round1)

# Round 2: conflicting signals. 'dynamic' flow appears in likes AND dislikes;
# 'circular' appears only in likes. The contrast separates them.
round2 = FeedbackRound(2, [
    (profile("e", visual_flow="circular"), Annotation.LIKED),
    (profile("f", visual_flow="dynamic"), Annotation.LIKED),
    (profile("g", visual_flow="dynamic"), Annotation.DISLIKED),
    (profile("h", visual_flow="dynamic"), Annotation.DISLIKED),
])
state.ingest_round(round2)

print("\ncumulative OR(visual_flow=circular):",
      round(state.cumulative_odds_ratio("visual_flow", "circular"), 3))
print("cumulative OR(visual_flow=dynamic): ",
      round(state.cumulative_odds_ratio("visual_flow", "dynamic"), 3))

d, mu_liked, mu_disliked = state.cumulative_effect_size("brightness")
print(f"\ncumulative brightness: d={d:.2f}, mu_liked={mu_liked:.2f}, "
      f"mu_disliked={mu_disliked:.2f}")

snapshot = preference_snapshot(state, repo)
print("\nsnapshot of artistic_style ranking:")
for item in snapshot["discrete"]["artistic_style"]:
    print(f"  {item['value']:<14} OR={item['odds_ratio']:.3f}")
print("pool size:", snapshot["pool_size"])
