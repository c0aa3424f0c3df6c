"""Pilot-aided channel estimation for an LTE-downlink-style OFDM link.

Least Squares, Decision Feedback and nonlinear complex SVR estimators,
a time-varying multipath channel with AWGN and Bernoulli-Gaussian impulse
noise, and a Monte Carlo BER harness.
"""

from .grid import OfdmConfig, ResourceGrid, TimeSignal, lte_preset
from .channel import EVA, PowerDelayProfile, ChannelRealization, generate_channel
from .svr_core import SvrHyperparams, PilotObservations, DualSolution, SolverError, solve_dual
from .estimators import ChannelEstimate, ls_estimate_frame, decision_feedback_estimate, svr_estimate_frame
from .harness import ScenarioConfig, BerRecord, run_point, run_scenario

__all__ = [
    "OfdmConfig", "ResourceGrid", "TimeSignal", "lte_preset",
    "EVA", "PowerDelayProfile", "ChannelRealization", "generate_channel",
    "SvrHyperparams", "PilotObservations", "DualSolution", "SolverError", "solve_dual",
    "ChannelEstimate", "ls_estimate_frame", "decision_feedback_estimate", "svr_estimate_frame",
    "ScenarioConfig", "BerRecord", "run_point", "run_scenario",
]
