"""Contextual importance and utility (CIU) explanations for black-box models."""

from ._core import (
    BlackBoxModel,
    CallableModel,
    CiuError,
    CiuResult,
    ConceptVocabulary,
    Dataset,
    FeatureKind,
    IndexSet,
    InputDescriptor,
    KnnModel,
    KnnTask,
    LinearModel,
    NonlinearDemoModel,
    OutputDescriptor,
    Problem,
    RuleStepModel,
    SmallMlp,
    contextual_importance,
    contextual_utility,
    cu_color,
    explain,
    explain_concept_decomposition,
    input_output_curve,
    load_csv,
    render_barplot,
    results_from_json,
    results_to_json,
    textual_explanation,
    train_mlp,
    unit_box_inputs,
    unit_outputs,
)

__all__ = [name for name in dir() if not name.startswith("_")]
