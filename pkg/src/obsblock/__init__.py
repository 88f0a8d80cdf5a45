"""Observability-blocking state feedback for network synchronization models.

A network of ``n`` nodes evolves as ``x' = -(L + B F) x`` with outputs
``y = C x``; the designs here choose ``F`` so that some mode of the closed
loop is invisible at the measured nodes while the rest of the eigenstructure
is left alone.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .netmodel import (NetworkGraph, NetworkModel, SimTrace, SystemMatrices,
                       build_matrices, laplacian, load_network,
                       model_from_dict, model_to_dict, save_network, simulate)
from .spectral import DEFAULT_TOL, Tolerances, eig, null_basis
from .eigassign import (GainMatrix, ModalTarget, complete_target,
                        gain_from_target, place_eigenvalues)
from .blocker import (BlockingDesign, Case, algorithm1, algorithm2,
                      block_modes, enable_mode, mode_index, select_mode)
from .topology import (BlockedLaplacian, CutPartition, grounded_spectrum_gap,
                       induced_subgraph, min_vertex_cut, partition_blocks)
from .verify import (Claims, Stability, VerificationReport,
                     classify_stability, unobservable_subspace, verify_design)
from .regional import (RegionalDesign, cutset_design, regional_design,
                       regional_stable_design)
from .fixtures import load_fixture
