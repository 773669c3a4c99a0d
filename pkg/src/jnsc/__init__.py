"""Joint network-source coding: rainbow network flow routing plus PET multiple description codes."""

__version__ = "0.1.0"

from .netgen import (CycleError, GrowthParams, Network, NetworkError, fig1_network, grow_dag,
                     load_network, network_from_dict, network_to_dict, save_network)
from .rainbow import (AdmissibilityReport, DescriptionSet, DistortionModel, FlowPath, RainbowFlow,
                      RainbowFlowVector, Violation, average_distortion, edge_spectrum, fig1_flow,
                      is_admissible, node_spectrum, rainbow_flow_vector, sink_distortion, validate_flow)
from .crnf import (ExtractionError, IlpModel, brute_force, build_crnf_ilp, build_weighted_rnf_ilp,
                   extract_flow)
from .solver import IlpSolution, Status, solve
from .pet import PetError, PetLayout, PetProfile, decode, encode, make_layout, pet_distortion
from .mdc import (GAUSSIAN, DistortionRate, ModelError, OptimizationProblem, gaussian_drf, objective,
                  objective_gradient, optimize_profile, ozarow_balanced_optimum, ozarow_joint_bound,
                  separate_coding_baseline)

__all__ = [
    "CycleError",
    "GrowthParams",
    "Network",
    "NetworkError",
    "fig1_network",
    "grow_dag",
    "load_network",
    "network_from_dict",
    "network_to_dict",
    "save_network",
    "AdmissibilityReport",
    "DescriptionSet",
    "DistortionModel",
    "FlowPath",
    "RainbowFlow",
    "RainbowFlowVector",
    "Violation",
    "average_distortion",
    "edge_spectrum",
    "fig1_flow",
    "is_admissible",
    "node_spectrum",
    "rainbow_flow_vector",
    "sink_distortion",
    "validate_flow",
    "ExtractionError",
    "IlpModel",
    "brute_force",
    "build_crnf_ilp",
    "build_weighted_rnf_ilp",
    "extract_flow",
    "IlpSolution",
    "Status",
    "solve",
    "PetError",
    "PetLayout",
    "PetProfile",
    "decode",
    "encode",
    "make_layout",
    "pet_distortion",
    "GAUSSIAN",
    "DistortionRate",
    "ModelError",
    "OptimizationProblem",
    "gaussian_drf",
    "objective",
    "objective_gradient",
    "optimize_profile",
    "ozarow_balanced_optimum",
    "ozarow_joint_bound",
    "separate_coding_baseline",
]
