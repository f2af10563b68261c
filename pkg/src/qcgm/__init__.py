"""Sampling discrete graphical models with post-selected quantum circuits.

The package compiles binary Markov random fields into statevector-simulated
circuits and compares them against Gibbs, perturb-and-MAP and an exhaustive
oracle.
"""
__version__ = "0.1.0"

from .model import (
    Dataset,
    DenseDistribution,
    GraphicalModel,
    brute_force_pmf,
    load_model,
    log_partition,
    log_potential,
    map_state_brute,
    moments,
    nll,
    normalize_for_circuit,
    partition_brute,
    phi_vector,
    save_model,
)
from .circuit import build_circuit, gamma_to_theta, theta_to_gamma
from .simulator import NoiseConfig, exact_conditional, sample_shots
from .samplers import GibbsConfig, SoGConfig, gibbs_sample, pam_sample, qcgm_sample
from .inference import AdamConfig, estimate_partition, learn_mle, map_estimate
from .metrics import fidelity, hellinger
