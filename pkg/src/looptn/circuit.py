"""Simulation of the looped squeezing circuit.

Each cycle squeezes the pair (cycling mode, fresh vacuum mode), mixes it
with a programmable SU(2) transform, and couples one polarization out as
the next temporal mode while the other keeps cycling.  The cycling mode is
axis "cyc"; emitted modes are labelled b1..bm in emission order.

Three backends share the same cycle structure:

* ``run_pure``      dense state vector (lossless only)
* ``run_density``   dense density matrix (supports per-cycle loss)
* ``run_branches``  Kraus-unravelled list of pure branches; sums of
                    branch projectors reproduce ``run_density`` exactly
                    and scale much better, which is what the variational
                    objectives use.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .fock import (
    DEFAULT_LEAKAGE_THRESHOLD,
    FockDensity,
    FockState,
    SqueezeParam,
    Su2Param,
    apply_loss_channel,
    apply_two_mode_gate,
    build_su2_mode_transform,
    build_two_mode_squeezer,
    loss_kraus_operators,
    partial_trace,
    project_occupation,
)

CYCLING_MODE = "cyc"
_FRESH = "_fresh"


def emitted_label(i: int) -> str:
    """Label of the i-th emitted temporal mode (1-based)."""
    return f"b{i}"


class Termination(str, Enum):
    """What happens to the cycling mode after the last cycle."""

    PROJECT_VACUUM = "project_vacuum"
    TRACE_OUT = "trace_out"


@dataclass(frozen=True)
class CycleParams:
    """Per-cycle controls: pump parameter and SU(2) mixing angles."""

    eta: SqueezeParam
    v: Su2Param

    def __post_init__(self):
        if not isinstance(self.eta, SqueezeParam):
            object.__setattr__(self, "eta", SqueezeParam(complex(self.eta)))
        if not isinstance(self.v, Su2Param):
            object.__setattr__(self, "v", Su2Param(*self.v))


@dataclass(frozen=True)
class LoopProgram:
    """Full description of one run of the loop."""

    cycles: tuple[CycleParams, ...]
    cutoff: int
    bond_cutoff: int | None = None
    loss_per_cycle: float = 0.0
    termination: Termination = Termination.PROJECT_VACUUM
    loss_on_emitted: bool = False
    v_before_u: bool = False
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "cycles", tuple(self.cycles))
        object.__setattr__(self, "termination", Termination(self.termination))
        if len(self.cycles) < 1:
            raise ValueError("program needs at least one cycle")
        if self.cutoff < 2:
            raise ValueError("cutoff must be at least 2")
        d = self.bond_cutoff
        if d is not None and not (1 <= d <= self.cutoff):
            raise ValueError("bond_cutoff must lie in [1, cutoff]")
        if not (0.0 <= self.loss_per_cycle < 1.0):
            raise ValueError("loss_per_cycle must lie in [0, 1)")

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)

    @property
    def bond_dim(self) -> int:
        return self.cutoff if self.bond_cutoff is None else self.bond_cutoff

    @property
    def emitted_modes(self) -> tuple[str, ...]:
        return tuple(emitted_label(i + 1) for i in range(self.n_cycles))


@dataclass(frozen=True)
class LatticeMap2D:
    """Interpretation of emission order as a 2D lattice.

    The secondary delay is 1/n of the main cycle time; ntilde is the number
    of sites along the fast axis and must satisfy ntilde < n so lattice
    sites are uniquely addressed.
    """

    n: int
    ntilde: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("delay ratio n must be at least 2")
        if not (1 <= self.ntilde < self.n):
            raise ValueError("ntilde must satisfy 1 <= ntilde < n")


def emitted_mode_schedule(m: int, lattice: LatticeMap2D) -> list[tuple[int, int]]:
    """Map emission indices 0..m-1 to (row, col) coordinates.

    Emission indices that differ by ntilde are neighbors along the slow
    axis (full cycle delay); indices that differ by 1 within a row are
    neighbors along the fast axis.
    """
    if m < 1:
        raise ValueError("need at least one emitted mode")
    return [(k // lattice.ntilde, k % lattice.ntilde) for k in range(m)]


# ---------------------------------------------------------------------------
# shared cycle machinery


def cycle_gates(program: LoopProgram):
    """Build (gate sequence, leakage) for every cycle.

    Each entry is a list of gates applied in order to (cycling, fresh).
    """
    d = program.cutoff
    out = []
    for cp in program.cycles:
        u, leak = build_two_mode_squeezer(
            cp.eta, d, leakage_threshold=program.leakage_threshold
        )
        v = build_su2_mode_transform(cp.v, d)
        gates = [v, u] if program.v_before_u else [u, v]
        out.append((gates, leak))
    return out


def program_max_leakage(program: LoopProgram) -> float:
    return max(leak for _, leak in cycle_gates(program))


@dataclass
class PureRunOutcome:
    state: FockState
    success_probability: float
    max_squeezer_leakage: float
    bond_truncation_weight: float


@dataclass
class DensityRunOutcome:
    density: FockDensity
    success_probability: float | None
    max_squeezer_leakage: float
    bond_truncation_weight: float


def _bond_zero_pure(amps: np.ndarray, bond_dim: int) -> tuple[np.ndarray, float]:
    """Zero cycling-mode components >= bond_dim (axis 0); report lost weight."""
    if bond_dim >= amps.shape[0]:
        return amps, 0.0
    lost = float(np.sum(np.abs(amps[bond_dim:]) ** 2))
    amps = amps.copy()
    amps[bond_dim:] = 0.0
    return amps, lost


def simulate_pure(program: LoopProgram) -> PureRunOutcome:
    if program.loss_per_cycle != 0.0:
        raise ValueError("pure backend supports lossless programs only")
    if program.termination is Termination.TRACE_OUT:
        raise ValueError("trace_out termination needs the density backend")
    d = program.cutoff
    bond = program.bond_dim
    gates = cycle_gates(program)
    max_leak = max(leak for _, leak in gates)

    amps = np.zeros((d,), dtype=np.complex128)
    amps[0] = 1.0
    truncated = 0.0
    for gate_list, _ in gates:
        amps = np.multiply.outer(amps, _vacuum_vec(d))
        for g in gate_list:
            amps = kernels.apply_two_mode(amps, 0, amps.ndim - 1, g)
        amps, lost = _bond_zero_pure(amps, bond)
        truncated += lost
    # cycling axis is 0, emitted axes follow in emission order
    projected = amps[0, ...]
    prob = float(np.sum(np.abs(projected) ** 2))
    state = FockState(program.emitted_modes, projected)
    return PureRunOutcome(state, prob, max_leak, truncated)


def run_pure(program: LoopProgram) -> FockState:
    """Dense lossless run; the returned state is unnormalized and its
    squared norm is the vacuum post-selection probability."""
    return simulate_pure(program).state


def _vacuum_vec(d: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[0] = 1.0
    return v


def simulate_density(program: LoopProgram) -> DensityRunOutcome:
    d = program.cutoff
    bond = program.bond_dim
    gates = cycle_gates(program)
    max_leak = max(leak for _, leak in gates)
    transmissivity = 1.0 - program.loss_per_cycle

    rho = FockDensity.vacuum((CYCLING_MODE,), d)
    truncated = 0.0
    for i, (gate_list, _) in enumerate(gates):
        label = emitted_label(i + 1)
        rho = _density_add_vacuum_mode(rho, label, d)
        for g in gate_list:
            rho = apply_two_mode_gate(rho, g, (CYCLING_MODE, label))
        if program.loss_per_cycle > 0.0:
            rho = apply_loss_channel(rho, CYCLING_MODE, transmissivity)
            if program.loss_on_emitted:
                rho = apply_loss_channel(rho, label, transmissivity)
        rho, lost = _bond_zero_density(rho, bond)
        truncated += lost

    if program.termination is Termination.PROJECT_VACUUM:
        rho = project_occupation(rho, CYCLING_MODE, 0)
        prob = rho.trace()
    else:
        rho = partial_trace(rho, list(program.emitted_modes))
        prob = None
    return DensityRunOutcome(rho, prob, max_leak, truncated)


def run_density(program: LoopProgram) -> FockDensity:
    """Dense density-matrix run; supports loss and both terminations."""
    return simulate_density(program).density


def _density_add_vacuum_mode(rho: FockDensity, label: str, d: int) -> FockDensity:
    modes = rho.modes + (label,)
    dims = rho.dims + (d,)
    m = len(rho.modes)
    t = rho.tensor()
    new = np.zeros(rho.dims + (d,) + rho.dims + (d,), dtype=np.complex128)
    idx_ket = tuple(slice(None) for _ in range(m)) + (0,)
    new[idx_ket + idx_ket] = t  # broadcasting over ket/bra blocks
    total = int(np.prod(dims))
    return FockDensity(modes, new.reshape(total, total), dims)


def _bond_zero_density(rho: FockDensity, bond_dim: int) -> tuple[FockDensity, float]:
    ax = rho.axis(CYCLING_MODE)
    d = rho.dims[ax]
    if bond_dim >= d:
        return rho, 0.0
    m = len(rho.modes)
    t = rho.tensor().copy()
    before = rho.trace()
    sl = [slice(None)] * (2 * m)
    sl[ax] = slice(bond_dim, None)
    t[tuple(sl)] = 0.0
    sl = [slice(None)] * (2 * m)
    sl[m + ax] = slice(bond_dim, None)
    t[tuple(sl)] = 0.0
    total = int(np.prod(rho.dims))
    out = FockDensity(rho.modes, t.reshape(total, total), rho.dims)
    return out, before - out.trace()


# ---------------------------------------------------------------------------
# Kraus-unravelled branch backend

_BRANCH_PRUNE = 1e-28  # squared-norm floor; exact zeros dominate in practice


def run_branches(program: LoopProgram) -> list[FockState]:
    """Lossy run as a list of unnormalized pure branches.

    The density matrix equals the sum of branch projectors; total weight
    (sum of squared norms) equals the trace of ``run_density``'s result.
    """
    d = program.cutoff
    bond = program.bond_dim
    gates = cycle_gates(program)
    transmissivity = 1.0 - program.loss_per_cycle
    kraus = (
        loss_kraus_operators(transmissivity, d)
        if program.loss_per_cycle > 0.0
        else None
    )

    start = np.zeros((d,), dtype=np.complex128)
    start[0] = 1.0
    branches = [start]
    for gate_list, _ in gates:
        new_branches = []
        for amps in branches:
            amps = np.multiply.outer(amps, _vacuum_vec(d))
            for g in gate_list:
                amps = kernels.apply_two_mode(amps, 0, amps.ndim - 1, g)
            outs = [amps]
            if kraus is not None:
                outs = _kraus_split(outs, 0, kraus)
                if program.loss_on_emitted:
                    outs = _kraus_split(outs, amps.ndim - 1, kraus)
            for out in outs:
                out, _ = _bond_zero_pure(out, bond)
                if np.sum(np.abs(out) ** 2) > _BRANCH_PRUNE:
                    new_branches.append(out)
        branches = new_branches

    modes = program.emitted_modes
    final = []
    if program.termination is Termination.PROJECT_VACUUM:
        for amps in branches:
            out = amps[0, ...]
            if np.sum(np.abs(out) ** 2) > _BRANCH_PRUNE:
                final.append(FockState(modes, out))
    else:
        for amps in branches:
            for j in range(amps.shape[0]):
                out = amps[j, ...]
                if np.sum(np.abs(out) ** 2) > _BRANCH_PRUNE:
                    final.append(FockState(modes, out))
    return final


def _kraus_split(branch_tensors, axis, kraus):
    outs = []
    for amps in branch_tensors:
        for k, kk in enumerate(kraus):
            out = kernels.apply_one_mode(amps, axis, kk)
            if np.sum(np.abs(out) ** 2) > _BRANCH_PRUNE:
                outs.append(out)
    return outs


def branches_trace(branches: list[FockState]) -> float:
    return float(sum(b.norm_sq() for b in branches))
