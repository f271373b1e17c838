"""Shared builders for test programs."""

import numpy as np

from looptn.circuit import CycleParams, LoopProgram
from looptn.fock import SqueezeParam, Su2Param

IDENTITY_V = Su2Param(0.0, 0.0, 0.0)
SWAP_V = Su2Param(np.pi, 0.0, 0.0)


def cycle(eta, theta=0.0, phi=0.0, lam=0.0):
    return CycleParams(SqueezeParam(complex(eta)), Su2Param(theta, phi, lam))


def heralded_w_program(m, r, d=4, **kwargs):
    """Hand-built heralded-W structure on m+1 emitted modes.

    Cycles 1..m pump with equal strength while the partner photon keeps
    cycling; the final cycle swaps the loop content out as the herald mode.
    """
    cycles = [CycleParams(SqueezeParam(r), IDENTITY_V) for _ in range(m)]
    cycles.append(CycleParams(SqueezeParam(0.0), SWAP_V))
    kwargs.setdefault("leakage_threshold", 0.2)
    return LoopProgram(tuple(cycles), cutoff=d, **kwargs)


def diluted_ghz_program(r, d=4, **kwargs):
    """Hand-built diluted-GHZ structure on 4 emitted modes.

    Pair creation in cycles 1 and 3; the partner is swapped out in the
    following cycle, so excitations appear as neighboring pairs.
    """
    cycles = (
        CycleParams(SqueezeParam(r), IDENTITY_V),
        CycleParams(SqueezeParam(0.0), SWAP_V),
        CycleParams(SqueezeParam(r), IDENTITY_V),
        CycleParams(SqueezeParam(0.0), SWAP_V),
    )
    kwargs.setdefault("leakage_threshold", 0.1)
    return LoopProgram(cycles, cutoff=d, **kwargs)


def random_program(rng, m_max=4, d=4, r_max=0.55, **kwargs):
    """Random program for property tests (permissive leakage threshold)."""
    m = int(rng.integers(1, m_max + 1))
    cycles = tuple(
        CycleParams(
            SqueezeParam(rng.uniform(0, r_max) * np.exp(1j * rng.uniform(-np.pi, np.pi))),
            Su2Param(
                rng.uniform(0, np.pi),
                rng.uniform(-np.pi, np.pi),
                rng.uniform(-np.pi, np.pi),
            ),
        )
        for _ in range(m)
    )
    kwargs.setdefault("leakage_threshold", 1.0)
    return LoopProgram(cycles, cutoff=d, **kwargs)
