"""Quantized distributed Nash-equilibrium seeking under denial-of-service attacks."""

from .dos import DosParams, DosTrace, ResilienceError, certify, generate
from .game import GameConstants, GameError, GameSpec, constants, default_game, solve_ne
from .quantization import NumericalExhaustion, ScalingState, UniformQuantizer, quantize
from .sim import SimContext, make_context, run, step
from .topology import Topology, TopologyError, build_matrices, h_max
from .tuner import DesignParams, TunerError, synthesize

__version__ = "0.1.0"

__all__ = [
    "DesignParams", "DosParams", "DosTrace", "GameConstants", "GameError", "GameSpec",
    "NumericalExhaustion", "ResilienceError", "ScalingState", "SimContext", "Topology",
    "TopologyError", "TunerError", "UniformQuantizer", "build_matrices", "certify",
    "constants", "default_game", "generate", "h_max", "make_context", "quantize", "run",
    "solve_ne", "step", "synthesize",
]
