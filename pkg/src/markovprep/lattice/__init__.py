"""Ready-made many-body processes: AKLT chain, driven BEC, eta-condensate."""
from .aklt import SpinChainSpec, aklt_hamiltonian, aklt_process, aklt_ground_space
from .bose import BoseFockBasis, BecModel, bec_process, bec_state
from .fermi import FermiFockBasis, EtaModel, eta_process, eta_state

__all__ = [
    "SpinChainSpec", "aklt_hamiltonian", "aklt_process", "aklt_ground_space",
    "BoseFockBasis", "BecModel", "bec_process", "bec_state",
    "FermiFockBasis", "EtaModel", "eta_process", "eta_state",
]
