"""Forwarding-source choice prediction on follow-graph diffusion traces.

Pipeline: load a directed follow graph and per-message forwarding cascades,
reconstruct message exposures, extract two-exposure forwarding choices,
featurize them, and fit/evaluate a maximum-likelihood logistic model that
predicts which exposure source a user forwards.
"""

from fwchoice.graph import FollowGraph, load_edges
from fwchoice.cascade import Cascade, ForwardEvent, load_cascades, dump_cascades
from fwchoice.exposure import (
    ChoiceInstance,
    ExposureRecord,
    compute_exposures,
    exposure_distribution,
    extract_instances,
)
from fwchoice.features import (
    FEATURE_NAMES,
    TABLE_GROUPING,
    PROSE_GROUPING,
    HistoryIndex,
    build_history_index,
    featurize,
    featurize_instances,
)
from fwchoice.model import ChoiceModel, TrainReport, fit, log_likelihood
from fwchoice.evaluation import EvalReport, evaluate, run_ablation, temporal_split
from fwchoice.synth import SynthConfig, generate_graph, sample_instances, simulate_cascades

__version__ = "0.1.0"
