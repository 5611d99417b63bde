"""Closed-loop run: a simulated user with hidden targets drives a session.

Everything is offline and deterministic: the mock generator realizes each
prompt's feature bundle (with a little noise), mock extraction reads it
back, and the simulated user likes candidates matching enough targets.
"""

from prefloop import SessionConfig, TargetProfile, default_repository, run_experiment
from prefloop.sim import summarize_reports

repo = default_repository()

profile = TargetProfile(
    discrete_targets={
        "visual_flow": "circular",
        "era_style": "futuristic",
        "edge_treatment": "stylized",
        "perspective": "birds_eye",
        "layout": "symmetrical",
    },
    ordinal_targets={"saturation": "vibrant", "frame": "closeup"},
    like_threshold=0.5,
    noise_rate=0.0,
)

config = SessionConfig(
    initial_prompt="a lighthouse on a cliff",
    candidates_per_round=6,
    seed=2024,
    max_rounds=11,
)

reports = run_experiment(repo, profile, config, rounds=10, trials=20)
summary = summarize_reports(reports)

print("hidden targets:", {**profile.discrete_targets, **profile.ordinal_targets})
print(f"trials: {summary['trials']}")
print(f"mean discrete top-1 accuracy: {summary['mean_discrete_top1']:.3f}")
print(f"ordinal sign+emphasis pass rate: {summary['ordinal_pass_rate']:.3f}")
print(f"mean aggregate accuracy: {summary['mean_aggregate_accuracy']:.3f}")

print("\nper-trial detail (first 5):")
for r in reports[:5]:
    recovered = [fid for fid, ok in r.discrete.items() if ok]
    print(f"  trial {r.trial}: accuracy={r.aggregate_accuracy:.2f} "
          f"recovered={recovered}")
