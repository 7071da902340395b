"""A compiler and probabilistic sampler for a 2D scenario-description
language: programs define distributions over scenes, and the sampler draws
scenes satisfying every declared and built-in requirement."""

from .errors import (ConstructionError, ExhaustionError, LexError, ParseError,
                     ResolutionError, SampleTimeError, ScenError, WorldError)
from .evaluator import ScenarioModel, run_program
from .parser import parse
from .sampler import SamplerConfig, SamplerReport, Scene, apply_pruning, sample_scene
from .worlds import WorldModel, load_bundled, load_world, resolve_world

__version__ = "0.1.0"

__all__ = [
    "ConstructionError", "ExhaustionError", "LexError", "ParseError",
    "ResolutionError", "SampleTimeError", "ScenError", "WorldError",
    "ScenarioModel", "run_program", "parse",
    "SamplerConfig", "SamplerReport", "Scene", "apply_pruning", "sample_scene",
    "WorldModel", "load_bundled", "load_world", "resolve_world",
    "__version__",
]
