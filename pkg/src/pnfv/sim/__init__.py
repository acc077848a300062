"""Entry/cloud/client middlebox simulator with the encapsulation wire format."""
from .encap import EncapError, EncapsulatedPacket, PnfvPayload, decapsulate, encapsulate
from .frames import (FrameError, NotIPv4, RawFrame, TruncatedFrame, build_frame,
                     fields_from_frame, minimal_frame)
from .roles import ClientKeys, Trace, bgn_client_verdict
from .scenario import ScenarioError, Simulator, parse_script, run_scenario, run_scenario_file

__all__ = [
    "ClientKeys", "EncapError", "EncapsulatedPacket", "FrameError", "NotIPv4", "PnfvPayload",
    "RawFrame", "ScenarioError", "Simulator", "Trace", "TruncatedFrame", "bgn_client_verdict",
    "build_frame", "decapsulate", "encapsulate", "fields_from_frame", "minimal_frame",
    "parse_script", "run_scenario", "run_scenario_file",
]
