"""Matrix-product-state view of the emitted light.

The loop circuit emits one temporal mode per cycle while entanglement is
mediated solely by the cycling mode, so the emitted state is exactly an
MPS whose bond space is the retained cycling-mode Fock space.  Site
tensors are read directly off the per-cycle gates; no dense state is ever
built.  Index order is A[s, a, b] with physical index s and left/right
bond indices (a, b).
"""

from dataclasses import dataclass

import numpy as np

from .circuit import LoopProgram, Termination, cycle_gates


@dataclass
class MpsState:
    """Site tensors plus boundary vectors; contraction gives amplitudes."""

    site_tensors: list[np.ndarray]
    left_boundary: np.ndarray
    right_boundary: np.ndarray

    def __post_init__(self):
        if not self.site_tensors:
            raise ValueError("need at least one site tensor")
        left = len(self.left_boundary)
        for i, t in enumerate(self.site_tensors):
            if t.ndim != 3:
                raise ValueError("site tensors must be rank 3")
            if t.shape[1] != left:
                raise ValueError(f"bond mismatch entering site {i}")
            left = t.shape[2]
        if len(self.right_boundary) != left:
            raise ValueError("right boundary does not match final bond")

    @property
    def n_sites(self) -> int:
        return len(self.site_tensors)

    @property
    def physical_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[0] for t in self.site_tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.site_tensors[:-1])

    def norm_sq(self) -> float:
        return float(mps_expectation(self, [], normalized=False).real)


def extract_mps(program: LoopProgram) -> MpsState:
    """Read the site tensors of a lossless program off its cycle gates.

    Site i is A[s, a, b] = <b, s| G_i |a, vacuum> with the bond indices
    restricted to the program's bond dimension; contracting the chain
    reproduces ``run_pure`` exactly.
    """
    if program.loss_per_cycle != 0.0:
        raise ValueError("MPS extraction requires a lossless program")
    if program.termination is Termination.TRACE_OUT:
        raise ValueError("trace_out termination is not a pure MPS")
    d = program.cutoff
    bond = program.bond_dim
    tensors = []
    for gate_list, _ in cycle_gates(program):
        g = gate_list[0]
        for extra in gate_list[1:]:
            g = extra @ g
        g4 = g.reshape(d, d, d, d)  # [cyc_out, fresh_out, cyc_in, fresh_in]
        a = g4[:bond, :, :bond, 0].transpose(1, 2, 0)  # -> [s, a, b]
        tensors.append(np.ascontiguousarray(a))
    boundary = np.zeros(bond, dtype=np.complex128)
    boundary[0] = 1.0
    return MpsState(tensors, boundary.copy(), boundary.copy())


def contract_to_amplitudes(mps: MpsState) -> np.ndarray:
    """Dense amplitude tensor of the MPS (for small chains and tests)."""
    cur = mps.left_boundary
    for a in mps.site_tensors:
        cur = np.tensordot(cur, a, axes=([-1], [1]))  # [..., s, b]
    return np.tensordot(cur, mps.right_boundary, axes=([-1], [0]))


def mps_expectation(mps: MpsState, observables, normalized: bool = True) -> complex:
    """Expectation of a product of single-site operators via transfer matrices.

    ``observables`` is a list of (site index, operator) pairs with distinct
    0-based indices; cost is linear in the chain length.
    """
    ops = {}
    for idx, op in observables:
        if not (0 <= idx < mps.n_sites):
            raise ValueError(f"site index {idx} out of range")
        if idx in ops:
            raise ValueError(f"duplicate site index {idx}")
        op = np.asarray(op)
        d = mps.site_tensors[idx].shape[0]
        if op.shape != (d, d):
            raise ValueError(f"operator at site {idx} must be {d}x{d}")
        ops[idx] = op

    env = np.outer(mps.left_boundary, mps.left_boundary.conj())
    for i, a in enumerate(mps.site_tensors):
        if i in ops:
            env = np.einsum("aA,sab,SAB,Ss->bB", env, a, a.conj(), ops[i])
        else:
            env = np.einsum("aA,sab,sAB->bB", env, a, a.conj())
    value = complex(
        np.einsum("bB,b,B->", env, mps.right_boundary, mps.right_boundary.conj())
    )
    if not normalized:
        return value
    norm = mps_expectation(mps, [], normalized=False).real
    if norm <= 0.0:
        raise ValueError("MPS has zero norm")
    return value / norm


def mps_fidelity(mps: MpsState, target) -> float:
    """|<target|psi>|^2 / (<psi|psi> <target|target>) against a dense state."""
    amps = np.asarray(target.amps if hasattr(target, "amps") else target)
    if amps.ndim != mps.n_sites:
        raise ValueError("target mode count does not match the chain")
    if tuple(amps.shape) != mps.physical_dims:
        raise ValueError("target cutoff does not match the chain")
    cur = np.tensordot(mps.left_boundary, mps.site_tensors[0], axes=([0], [1]))
    # cur[s1, b]; fold the conjugated target one site at a time
    overlap_carrier = np.tensordot(amps.conj(), cur, axes=([0], [0]))
    # overlap_carrier[s2..sm, b]
    for a in mps.site_tensors[1:]:
        overlap_carrier = np.tensordot(overlap_carrier, a, axes=([0, -1], [0, 1]))
    overlap = complex(np.tensordot(overlap_carrier, mps.right_boundary, axes=([0], [0])))
    norm_mps = mps_expectation(mps, [], normalized=False).real
    norm_target = float(np.vdot(amps, amps).real)
    if norm_mps <= 0.0 or norm_target <= 0.0:
        raise ValueError("zero-norm state in fidelity")
    return float(abs(overlap) ** 2 / (norm_mps * norm_target))


def left_canonicalize(mps: MpsState) -> MpsState:
    """QR-based left canonicalization (numerical stability for long chains).

    The state is unchanged; every site except the last becomes an isometry
    and the overall weight moves into the final tensor/boundary.
    """
    tensors = []
    first = np.tensordot(mps.left_boundary, mps.site_tensors[0], axes=([0], [1]))
    # first[s, b] -> shape (s, 1, b)
    carry = first[:, None, :]
    for nxt in mps.site_tensors[1:]:
        d, chi_l, chi_r = carry.shape
        mat = carry.reshape(d * chi_l, chi_r)
        q, r = np.linalg.qr(mat)
        chi_new = q.shape[1]
        tensors.append(q.reshape(d, chi_l, chi_new))
        carry = np.tensordot(r, nxt, axes=([1], [1])).transpose(1, 0, 2)
    d, chi_l, chi_r = carry.shape
    mat = carry.reshape(d * chi_l, chi_r)
    q, r = np.linalg.qr(mat)
    tensors.append(q.reshape(d, chi_l, q.shape[1]))
    right = r @ mps.right_boundary
    left = np.ones(1, dtype=np.complex128)
    return MpsState(tensors, left, right)
