"""prefloop: infer visual preferences from like/dislike feedback and turn
them into structured prompt constraints for a text-to-image generator."""

from .config import BackendSettings, SessionConfig, load_session_config
from .engine import (
    Annotation,
    ContingencyCells,
    FeedbackRound,
    PreferenceState,
    cohens_d_round,
    entropy_weight,
    preference_snapshot,
    round_contingency,
    round_odds_ratio,
)
from .profiles import ImageFeatureProfile, ImageRef
from .prompts import (
    PromptSpec,
    assemble_prompt_template,
    assemble_prompt_vlm,
    build_assembly_instructions,
    derive_negative_terms,
)
from .repository import (
    FeatureKind,
    FeatureRepository,
    FeatureSpec,
    default_repository,
    load_repository,
    load_repository_file,
    nearest_level,
    normalize_ordinal_level,
)
from .sampling import (
    CreativeMaterialsPool,
    SampledFeatureBundle,
    SamplingConfig,
    gaussian_sample_ordinal,
    pool_sample,
    roulette_sample,
    select_feature_bundle,
)
from .session import Phase, SessionRecord, SessionService
from .sim import TargetProfile, brute_force_state, run_experiment, simulated_feedback

__version__ = "0.1.0"
