"""Encrypted network-function schemes: FHE, BGN, searchable encryption, state tables."""
from .bgn import (BgnBundle, BgnResult, UnsupportedWidth, bgn_decrypt_result, bgn_encrypt_packet,
                  bgn_process, bgn_transform)
from .codec import SchemeId, TransformedFunction, WireError
from .fhe import fhe_decrypt, fhe_encrypt_packet, fhe_process, fhe_run, fhe_transform
from .peks import (CorruptedPacket, CorruptedTransform, EntryOutput, UnsupportedPolicy,
                   peks_cloud_process, peks_decrypt, peks_entry_process, peks_transform)
from .state import (STATE_EST, STATE_NEW, TAG_ALLOW, TAG_DROP, StateHit, StateTable,
                    StateTableEntry, UnknownEntry, state_create)

__all__ = [
    "BgnBundle", "BgnResult", "CorruptedPacket", "CorruptedTransform", "EntryOutput",
    "STATE_EST", "STATE_NEW", "SchemeId", "StateHit", "StateTable", "StateTableEntry",
    "TAG_ALLOW", "TAG_DROP", "TransformedFunction", "UnknownEntry", "UnsupportedPolicy",
    "UnsupportedWidth", "WireError", "bgn_decrypt_result", "bgn_encrypt_packet", "bgn_process",
    "bgn_transform", "fhe_decrypt", "fhe_encrypt_packet", "fhe_process", "fhe_run",
    "fhe_transform", "peks_cloud_process", "peks_decrypt", "peks_entry_process",
    "peks_transform", "state_create",
]
