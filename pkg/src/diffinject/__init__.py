"""Simulation of common-mode injection attacks on differential links."""
from ._backend import BACKEND
from .attacker import (
    SEND_NOTHING, AttackDecision, FeasibleSet, FlipPair, GuessModel, decide, draw_guess,
    expected_p0, expected_p1, objective, optimal_pair, success_prob_inject0, success_prob_inject1,
)
from .campaign import (
    GROUPED, INDEPENDENT, CampaignConfig, CampaignResult, MessageSpec, analytic_rate,
    compare_pairs, count_dominant_groups, message_bounds, simulate_bit, simulate_message,
    success_rate_samples,
)
from .can_codec import (
    FIG8_FRAME, AttackSchedule, BitStream, CanFrame, attack_schedule, crc15, destuff,
    encode_frame, frame_to_message_spec, stuff,
)
from .errors import DiffInjectError, LoadError, ParameterError, StructuralError
from .receiver import (
    BitTrace, ReceiverParams, accumulate_offset, detect_bits, esd_clamp, flip_probability,
)
from .reports import SusceptibilityGrid, grid_to_feasible, load_grid, load_profile, save_grid
from .signal_core import (
    CommonModeCurve, DifferentialPair, ModePair, SubtractorParams, TransferParams, Waveform,
    apply_transfer, decompose, inject_common_mode, recompose, sinad, subtractor_output,
)

__version__ = "0.1.0"
