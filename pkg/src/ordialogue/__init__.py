"""Toolkit for reconstructing speaker-attributed teaching dialogue from long
multi-speaker recordings, removing ASR hallucinations with few-shot voice
anchors, detecting teaching feedback, and evaluating against timestamped
human annotations."""

from .timeline import (
    AudioBuffer,
    AudioChunk,
    FrameActivitySeries,
    TimeSpan,
    chunk_audio,
    intersect,
    mean_activity,
    resample_to_mono_16k,
)
from .reconstruction import (
    DiarizedSegment,
    ReconstructionConfig,
    TranscribedUtterance,
    gate_segments,
    reconstruct_chunk,
    reconstruct_recording,
)
from .refinement import (
    AnchorProfile,
    RoleAttributedUtterance,
    RoleDecision,
    SpeakerAnchor,
    build_anchor_profile,
    classify_speaker,
    cosine_similarity,
    detect_trivial_hallucination,
    precision_leaning_mean,
    refine_utterances,
    role_similarity,
    sweep_similarity_threshold,
)
from .dialogue import (
    ContextWindow,
    DialogueTurn,
    assemble_dialogue,
    context_window,
    extract_fixed_windows,
    extract_training_clip,
    vad_only_predict,
)
from .tasks import (
    ComponentPrediction,
    EffectivenessPrediction,
    FeedbackPrediction,
    classify_components,
    classify_feedback,
    parse_yes_no_map,
    predict_effectiveness,
)
from .evaluation import (
    BinaryMetrics,
    ConfusionCounts,
    FeedbackAnnotation,
    McNemarResult,
    binary_metrics,
    compare_variants,
    match_predictions,
    mcnemar,
)
from .simulate import SurgeryScenario, make_scenario, simulate_surgery

__version__ = "0.1.0"
