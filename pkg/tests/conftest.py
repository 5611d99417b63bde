"""Shared fixtures: repositories, profile builders, random feedback histories."""

from __future__ import annotations

import json

import pytest

from prefloop.engine import Annotation, FeedbackRound
from prefloop.profiles import ImageFeatureProfile
from prefloop.repository import FeatureKind, default_repository, load_repository


@pytest.fixture(scope="session")
def repo():
    return default_repository()


MINI_REPO_DOC = {
    "version": "test",
    "dimensions": ["style", "color", "subject"],
    "features": [
        {"id": "composition", "dimension": "style", "kind": "discrete",
         "values": ["comp_a", "comp_b", "comp_c"]},
        {"id": "palette", "dimension": "color", "kind": "discrete",
         "values": ["warm", "cold"]},
        {"id": "brightness", "dimension": "color", "kind": "ordinal",
         "values": ["dark", "dim", "bright", "high_key"]},
        {"id": "saturation", "dimension": "color", "kind": "ordinal",
         "values": ["desaturated", "muted", "vibrant"]},
        {"id": "notes", "dimension": "subject", "kind": "freeform"},
    ],
}


@pytest.fixture(scope="session")
def mini_repo():
    """Small repository for hand-computable fixtures."""
    return load_repository(json.dumps(MINI_REPO_DOC))


def make_profile(repo, image_id, values=None, freeform=None):
    """Profile with every feature filled; unspecified ones take the first value."""
    values = values or {}
    discrete, ordinal, free = {}, {}, {}
    for spec in repo.all_features():
        if spec.kind is FeatureKind.FREEFORM:
            free[spec.id] = list((freeform or {}).get(spec.id, []))
        elif spec.kind is FeatureKind.ORDINAL:
            ordinal[spec.id] = values.get(spec.id, spec.values[0])
        else:
            discrete[spec.id] = values.get(spec.id, spec.values[0])
    return ImageFeatureProfile(
        image=image_id,
        discrete_values=discrete,
        ordinal_values=ordinal,
        freeform_values=free,
    )


def random_profile(repo, image_id, rng):
    values = {
        spec.id: spec.values[int(rng.integers(len(spec.values)))]
        for spec in repo.all_features()
        if spec.kind is not FeatureKind.FREEFORM
    }
    return make_profile(repo, image_id, values)


def random_history(repo, rng, min_rounds=2, max_rounds=15, min_cands=2, max_cands=8):
    """Random feedback history; degenerate rounds occur naturally."""
    n_rounds = int(rng.integers(min_rounds, max_rounds + 1))
    history = []
    annotations = [Annotation.LIKED, Annotation.DISLIKED, Annotation.UNLABELED]
    for t in range(1, n_rounds + 1):
        n = int(rng.integers(min_cands, max_cands + 1))
        entries = []
        for i in range(n):
            profile = random_profile(repo, f"img-{t}-{i}", rng)
            entries.append((profile, annotations[int(rng.integers(3))]))
        history.append(FeedbackRound(round_index=t, entries=entries))
    return history


def make_round(repo, round_index, liked_values, disliked_values, unlabeled_values=()):
    """Round from lists of per-candidate value dicts."""
    entries = []
    counter = 0
    for group, annotation in (
        (liked_values, Annotation.LIKED),
        (disliked_values, Annotation.DISLIKED),
        (unlabeled_values, Annotation.UNLABELED),
    ):
        for values in group:
            entries.append(
                (make_profile(repo, f"img-{round_index}-{counter}", values), annotation)
            )
            counter += 1
    return FeedbackRound(round_index=round_index, entries=entries)
