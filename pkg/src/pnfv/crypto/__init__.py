"""Cryptographic building blocks behind one bilinear-group interface."""
from .bgn import (BgnCiphertext, BgnPrivateKey, BgnPublicKey, LevelError, SOURCE, TARGET,
                  generate_bgn_keypair)
from .dlog import BabyStepGiantStep, DlogNotFound
from .group import BilinearGroup, ExponentGroup
from .mockfhe import (FheCiphertext, MockFhePrivateKey, MockFhePublicKey, equal_bits, geq_bits,
                      generate_mockfhe_keypair, leq_bits)
from .peks import PeksCiphertext, PeksPrivateKey, PeksPublicKey, Trapdoor, generate_peks_keypair
from .pke import IntegrityError, PkePrivateKey, PkePublicKey, generate_pke_keypair
from .prp import Permutation, prp_shuffle

__all__ = [
    "BabyStepGiantStep", "BgnCiphertext", "BgnPrivateKey", "BgnPublicKey", "BilinearGroup",
    "DlogNotFound", "ExponentGroup", "FheCiphertext", "IntegrityError", "LevelError",
    "MockFhePrivateKey", "MockFhePublicKey", "PeksCiphertext", "PeksPrivateKey", "PeksPublicKey",
    "Permutation", "PkePrivateKey", "PkePublicKey", "SOURCE", "TARGET", "Trapdoor", "equal_bits",
    "generate_bgn_keypair", "generate_mockfhe_keypair", "generate_peks_keypair",
    "generate_pke_keypair", "geq_bits", "leq_bits", "prp_shuffle",
]
