import copy
import types

import numpy as np
import pytest

from cpblab.bose_hubbard import Basis, StateVector
from cpblab.config import DEFAULT_CONFIG


# Small helper to mimic argparse.Namespace
def ns(**kwargs):
    return types.SimpleNamespace(**kwargs)


@pytest.fixture
def cfg_default():
    # Defaults with a smaller box so every command finishes quickly
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    cfg["box"] = {"E_C": 1.0, "E_J": 5.0, "N": 200, "n_bar": 100.0}
    cfg["coupled"]["box2"] = {"E_C": 1.0, "E_J": 5.0, "N": 200, "n_bar": 100.0}
    cfg["band"]["points"] = 5
    cfg["band"]["M"] = 30
    cfg["compare"]["M"] = 30
    cfg["dynamics"]["t_end"] = 2.0
    cfg["coupled"]["t_end"] = 2.0
    cfg["lindblad"]["t_end"] = 0.2
    cfg["witness"]["samples"] = 200
    return cfg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_fock_state(rng, cutoff: int, support: int) -> StateVector:
    """Normalized complex state on Fock levels 0..support-1 inside 0..cutoff."""
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[:support] = rng.normal(size=support) + 1j * rng.normal(size=support)
    return StateVector(amps / np.linalg.norm(amps), Basis.fock(cutoff))
