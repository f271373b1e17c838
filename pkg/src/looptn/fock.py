"""Truncated bosonic Fock-space primitives.

Everything operates on dense complex amplitude tensors with one axis per
mode (occupations 0..d-1 along each axis).  A pure state is a rank-m
tensor, a density matrix is a (prod(dims), prod(dims)) matrix.  Gates are
matrices over the combined occupation index of their target modes in
row-major order.

The two-mode squeezer is the exponential of the pair-creation generator.
To make truncation behave like the physical operator (weight escaping
above the cutoff is lost, not reflected back), the generator is built and
exponentiated on an internally enlarged space and then restricted to the
requested cutoff.  The resulting column-norm deficit on low-occupation
inputs is the leakage metric reported to callers; builds abort when it
exceeds the configured threshold.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import kernels

DEFAULT_R_MAX = 2.0
DEFAULT_LEAKAGE_THRESHOLD = 1e-8

# Leakage is monitored on input columns with at most this many total photons;
# higher-occupation columns sit against the cutoff and always leak O(1).
_LEAKAGE_MAX_OCC = 2


class TruncationError(RuntimeError):
    """Cutoff too small for the requested operation."""


@dataclass(frozen=True)
class SqueezeParam:
    """Complex pump parameter of the two-mode squeezer.

    The magnitude is the squeezing strength r, the phase is the pump phase.
    """

    eta: complex
    r_max: float = DEFAULT_R_MAX

    def __post_init__(self):
        if abs(self.eta) > self.r_max + 1e-12:
            raise ValueError(
                f"|eta| = {abs(self.eta):.4g} exceeds the bound r_max = {self.r_max}"
            )

    @property
    def r(self) -> float:
        return abs(self.eta)

    @property
    def phase(self) -> float:
        return float(np.angle(self.eta))


@dataclass(frozen=True)
class Su2Param:
    """ZYZ Euler angles (theta, phi, lam) of a 2x2 special unitary."""

    theta: float
    phi: float
    lam: float

    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.theta / 2), np.sin(self.theta / 2)
        ep = np.exp(0.5j * (self.phi + self.lam))
        em = np.exp(0.5j * (self.phi - self.lam))
        return np.array(
            [[np.conj(ep) * c, -np.conj(em) * s],
             [em * s, ep * c]]
        )


@dataclass
class FockState:
    """Pure multimode state as a dense rank-m amplitude tensor.

    The squared norm may be below 1 after post-selection or truncation
    leakage; callers treat it as the retained probability.
    """

    modes: tuple[str, ...]
    amps: np.ndarray

    def __post_init__(self):
        self.modes = tuple(self.modes)
        if self.amps.ndim != len(self.modes):
            raise ValueError("amplitude tensor rank must equal the mode count")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("duplicate mode labels")
        self.amps = np.asarray(self.amps, dtype=np.complex128)

    @classmethod
    def vacuum(cls, modes, cutoff: int) -> "FockState":
        modes = tuple(modes)
        amps = np.zeros((cutoff,) * len(modes), dtype=np.complex128)
        amps[(0,) * len(modes)] = 1.0
        return cls(modes, amps)

    @classmethod
    def from_occupation(cls, modes, occupation, cutoff: int) -> "FockState":
        modes = tuple(modes)
        amps = np.zeros((cutoff,) * len(modes), dtype=np.complex128)
        amps[tuple(occupation)] = 1.0
        return cls(modes, amps)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.amps.shape

    @property
    def cutoff(self) -> int:
        d = set(self.amps.shape)
        if len(d) != 1:
            raise ValueError("state has non-uniform per-mode dimensions")
        return d.pop()

    def axis(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise KeyError(f"mode {mode!r} not in state") from None

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def normalized(self) -> "FockState":
        n = np.sqrt(self.norm_sq())
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return FockState(self.modes, self.amps / n)

    def to_density(self) -> "FockDensity":
        v = self.amps.reshape(-1)
        return FockDensity(self.modes, np.outer(v, v.conj()), self.dims)

    def overlap(self, other: "FockState") -> complex:
        if self.modes != other.modes or self.dims != other.dims:
            raise ValueError("mode mismatch")
        return complex(np.vdot(other.amps, self.amps))


@dataclass
class FockDensity:
    """Density matrix over labelled modes, stored as a flat square matrix."""

    modes: tuple[str, ...]
    mat: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        self.modes = tuple(self.modes)
        self.mat = np.asarray(self.mat, dtype=np.complex128)
        if not self.dims:
            # infer a uniform per-mode dimension
            d = round(self.mat.shape[0] ** (1.0 / len(self.modes)))
            self.dims = (d,) * len(self.modes)
        self.dims = tuple(int(d) for d in self.dims)
        total = int(np.prod(self.dims))
        if self.mat.shape != (total, total):
            raise ValueError("matrix shape inconsistent with mode dimensions")

    @classmethod
    def vacuum(cls, modes, cutoff: int) -> "FockDensity":
        return FockState.vacuum(modes, cutoff).to_density()

    @property
    def cutoff(self) -> int:
        d = set(self.dims)
        if len(d) != 1:
            raise ValueError("density has non-uniform per-mode dimensions")
        return d.pop()

    def axis(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise KeyError(f"mode {mode!r} not in state") from None

    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def tensor(self) -> np.ndarray:
        """View as a rank-2m tensor (ket axes first, then bra axes)."""
        return self.mat.reshape(self.dims + self.dims)

    def validate(self, herm_tol: float = 1e-12, psd_tol: float = 1e-10) -> None:
        """Check Hermiticity, trace and positivity; raise on violation."""
        dev = np.max(np.abs(self.mat - self.mat.conj().T))
        if dev > herm_tol:
            raise ValueError(f"density not Hermitian: deviation {dev:.3e}")
        tr = self.trace()
        if not (0.0 < tr <= 1.0 + 1e-10):
            raise ValueError(f"trace {tr} outside (0, 1]")
        lo = float(np.linalg.eigvalsh(self.mat)[0])
        if lo < -psd_tol:
            raise ValueError(f"density not positive semidefinite: min eig {lo:.3e}")

    def expectation(self, op_full: np.ndarray) -> complex:
        return complex(np.trace(op_full @ self.mat))


# ---------------------------------------------------------------------------
# elementary operators


def annihilation_operator(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, d)), 1).astype(np.complex128)


def number_operator(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=np.complex128))


def expm_antihermitian(k: np.ndarray) -> np.ndarray:
    """exp(K) for anti-Hermitian K via eigendecomposition of iK... (-iK)."""
    h = -1j * k
    w, q = np.linalg.eigh(h)
    return (q * np.exp(1j * w)) @ q.conj().T


# ---------------------------------------------------------------------------
# two-mode squeezer


def _squeezer_pad(r: float) -> int:
    # Margin above the requested cutoff so the restricted exponential matches
    # the physical (untruncated) matrix elements to ~1e-12 for r <= 0.75;
    # calibrated against high-pad references.
    return 12 + 8 * int(np.ceil(2.0 * max(r, 0.0)))


@lru_cache(maxsize=64)
def _squeezer_blocks(d: int, d_int: int):
    """Per-block eigendata of the pair-creation generator.

    The generator conserves n_h - n_v, so it splits into tridiagonal blocks
    over {|k+delta, k>}.  For each delta in 0..d-1 this returns the block's
    eigenvalues and the eigenvector rows belonging to the requested cutoff
    (k < d - delta), computed on the padded space of size d_int - delta.
    """
    blocks = []
    for delta in range(d):
        size = d_int - delta
        k = np.arange(size - 1)
        coupling = np.sqrt((k + delta + 1.0) * (k + 1.0))
        gen = np.zeros((size, size), dtype=np.complex128)
        gen[k + 1, k] = coupling
        gen[k, k + 1] = -coupling
        w, q = np.linalg.eigh(-1j * gen)
        rows = np.ascontiguousarray(q[: d - delta, :])
        blocks.append((w, rows, np.ascontiguousarray(rows.conj().T)))
    return blocks


def build_two_mode_squeezer(
    eta: SqueezeParam | complex,
    cutoff: int,
    *,
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD,
) -> tuple[np.ndarray, float]:
    """Two-mode squeezing gate exp(eta ad_h ad_v - eta* a_h a_v) at a cutoff.

    Returns ``(gate, leakage)`` where gate is the (d^2, d^2) restriction of
    the padded-space exponential (assembled block by block in the conserved
    n_h - n_v sectors) and leakage is the largest column-norm deficit over
    input columns with at most two total photons.

    Raises TruncationError when the leakage exceeds the threshold, i.e. the
    cutoff is too small for the requested pump strength.
    """
    if not isinstance(eta, SqueezeParam):
        eta = SqueezeParam(complex(eta))
    d = int(cutoff)
    if d < 2:
        raise ValueError("cutoff must be at least 2")
    r, phase = eta.r, eta.phase

    d_int = d + _squeezer_pad(r)
    blocks = _squeezer_blocks(d, d_int)
    gate = np.zeros((d * d, d * d), dtype=np.complex128)
    for delta, (w, rows, rows_h) in enumerate(blocks):
        block = (rows * np.exp(1j * r * w)[None, :]) @ rows_h
        k = np.arange(d - delta)
        idx = (k + delta) * d + k
        gate[np.ix_(idx, idx)] = block
        if delta > 0:  # mirror block: generator is symmetric in h <-> v
            idx_m = k * d + (k + delta)
            gate[np.ix_(idx_m, idx_m)] = block

    if phase != 0.0:
        # exp(i phase/2 (n_h+n_v)) conjugation rotates eta's phase in.
        tot = (np.arange(d)[:, None] + np.arange(d)[None, :]).reshape(-1)
        p = np.exp(0.5j * phase * tot)
        gate = (p[:, None] * gate) * p.conj()[None, :]

    leakage = squeezer_leakage_from_gate(gate, d)
    if leakage > leakage_threshold:
        raise TruncationError(
            f"squeezer leakage {leakage:.3e} exceeds threshold "
            f"{leakage_threshold:.3e} (cutoff {d} too small for |eta| = {r:.3g})"
        )
    return gate, leakage


def squeezer_leakage_from_gate(gate: np.ndarray, d: int) -> float:
    """Max column-norm deficit over inputs with total occupation <= 2."""
    tot = (np.arange(d)[:, None] + np.arange(d)[None, :]).reshape(-1)
    cols = np.flatnonzero(tot <= _LEAKAGE_MAX_OCC)
    norms = np.linalg.norm(gate[:, cols], axis=0)
    return float(np.max(1.0 - norms))


def squeezer_leakage(eta: SqueezeParam | complex, cutoff: int) -> float:
    """Leakage the squeezer would incur at this cutoff (no threshold check)."""
    gate, leak = build_two_mode_squeezer(eta, cutoff, leakage_threshold=np.inf)
    return leak


# ---------------------------------------------------------------------------
# passive SU(2) mode transform


def _su2_log(v: np.ndarray) -> np.ndarray:
    """Hermitian h with exp(-i h) = v for v in SU(2)."""
    # v = cos(chi) I - i sin(chi) (n . sigma)
    c = 0.5 * (v[0, 0] + v[1, 1]).real
    sx = -0.5 * (v[0, 1] + v[1, 0]).imag
    sy = 0.5 * (v[1, 0] - v[0, 1]).real
    sz = -v[0, 0].imag
    s = float(np.sqrt(sx * sx + sy * sy + sz * sz))
    chi = float(np.arctan2(s, c))
    if s < 1e-15:
        if c > 0:
            return np.zeros((2, 2), dtype=np.complex128)
        # v = -I: any axis works
        return np.pi * np.diag([1.0, -1.0]).astype(np.complex128)
    n = np.array([sx, sy, sz]) / s
    sigma = (
        n[0] * np.array([[0, 1], [1, 0]], dtype=np.complex128)
        + n[1] * np.array([[0, -1j], [1j, 0]])
        + n[2] * np.array([[1, 0], [0, -1]], dtype=np.complex128)
    )
    return chi * sigma


@lru_cache(maxsize=16)
def _passive_generator_parts(d: int):
    a = annihilation_operator(d)
    ad = a.conj().T
    n = number_operator(d)
    eye = np.eye(d, dtype=np.complex128)
    return (
        np.kron(n, eye),
        np.kron(eye, n),
        np.kron(ad, a),
        np.kron(a, ad),
    )


def build_su2_mode_transform(v: Su2Param, cutoff: int) -> np.ndarray:
    """Passive transform implementing ad_j -> sum_i V_ij ad_i on two modes.

    Photon-number conserving, hence block diagonal in total occupation and
    exactly unitary on the truncated space; blocks with n_h + n_v <= d-1
    coincide with the untruncated transform.
    """
    d = int(cutoff)
    h2 = _su2_log(v.matrix())
    nh, nv, ehv, evh = _passive_generator_parts(d)
    h_fock = h2[0, 0] * nh + h2[1, 1] * nv + h2[0, 1] * ehv + h2[1, 0] * evh
    w, q = np.linalg.eigh(h_fock)
    return (q * np.exp(-1j * w)[None, :]) @ q.conj().T


# ---------------------------------------------------------------------------
# gate application


def apply_two_mode_gate(state, gate: np.ndarray, targets) -> "FockState | FockDensity":
    """Apply a two-mode gate to the named target modes of a state.

    For a density matrix the gate is applied by conjugation.  The gate row
    index runs over (n_first, n_second) in row-major order.
    """
    t1, t2 = targets
    if t1 == t2:
        raise ValueError("target modes must be distinct")
    if isinstance(state, FockState):
        ax1, ax2 = state.axis(t1), state.axis(t2)
        _check_gate_dims(gate, state.dims[ax1], state.dims[ax2])
        return FockState(state.modes, kernels.apply_two_mode(state.amps, ax1, ax2, gate))
    if isinstance(state, FockDensity):
        ax1, ax2 = state.axis(t1), state.axis(t2)
        _check_gate_dims(gate, state.dims[ax1], state.dims[ax2])
        m = len(state.modes)
        t = state.tensor()
        t = kernels.apply_two_mode(t, ax1, ax2, gate)
        t = kernels.apply_two_mode(t, m + ax1, m + ax2, gate.conj())
        total = int(np.prod(state.dims))
        return FockDensity(state.modes, t.reshape(total, total), state.dims)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _check_gate_dims(gate: np.ndarray, d1: int, d2: int) -> None:
    if gate.shape != (d1 * d2, d1 * d2):
        raise ValueError(
            f"gate shape {gate.shape} does not match target dimensions ({d1}, {d2})"
        )


def apply_one_mode_gate(state, op: np.ndarray, target: str):
    """Apply a single-mode operator (not necessarily unitary) to one mode."""
    if isinstance(state, FockState):
        ax = state.axis(target)
        return FockState(state.modes, kernels.apply_one_mode(state.amps, ax, op))
    if isinstance(state, FockDensity):
        ax = state.axis(target)
        m = len(state.modes)
        t = state.tensor()
        t = kernels.apply_one_mode(t, ax, op)
        t = kernels.apply_one_mode(t, m + ax, op.conj())
        total = int(np.prod(state.dims))
        return FockDensity(state.modes, t.reshape(total, total), state.dims)
    raise TypeError(f"unsupported state type {type(state).__name__}")


# ---------------------------------------------------------------------------
# pure-loss channel


def loss_kraus_operators(transmissivity: float, d: int) -> list[np.ndarray]:
    """Kraus family of the pure-loss channel with transmissivity T.

    K_k |n> = sqrt(C(n,k) (1-T)^k T^(n-k)) |n-k>, k = 0..d-1; satisfies
    sum_k K_k^dag K_k = I exactly at any cutoff.
    """
    t = float(transmissivity)
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"transmissivity {t} outside [0, 1]")
    ops = []
    for k in range(d):
        kk = np.zeros((d, d))
        for n in range(k, d):
            kk[n - k, n] = np.sqrt(comb(n, k) * (1.0 - t) ** k * t ** (n - k))
        ops.append(kk.astype(np.complex128))
    return ops


def apply_loss_channel(state: FockDensity, mode: str, transmissivity: float) -> FockDensity:
    """Pure-loss channel on one mode of a density matrix (trace preserving)."""
    if not isinstance(state, FockDensity):
        raise TypeError("loss channel requires a density matrix")
    ax = state.axis(mode)
    d = state.dims[ax]
    if transmissivity == 1.0:
        return FockDensity(state.modes, state.mat.copy(), state.dims)
    kraus = loss_kraus_operators(transmissivity, d)
    m = len(state.modes)
    total = int(np.prod(state.dims))
    acc = np.zeros(state.dims + state.dims, dtype=np.complex128)
    t = state.tensor()
    for kk in kraus:
        branch = kernels.apply_one_mode(t, ax, kk)
        acc += kernels.apply_one_mode(branch, m + ax, kk.conj())
    return FockDensity(state.modes, acc.reshape(total, total), state.dims)


# ---------------------------------------------------------------------------
# partial trace and projections


def partial_trace(state: FockDensity, keep) -> FockDensity:
    """Trace out all modes not in ``keep`` (original mode order preserved)."""
    keep = list(keep)
    if not keep:
        raise ValueError("must keep at least one mode")
    for k in keep:
        if k not in state.modes:
            raise KeyError(f"mode {k!r} not in state")
    keep_set = set(keep)
    kept = [m for m in state.modes if m in keep_set]
    m = len(state.modes)
    t = state.tensor()
    ket = list(range(m))
    bra = list(range(m, 2 * m))
    for i, mode in enumerate(state.modes):
        if mode not in kept:
            bra[i] = ket[i]
    out_axes = [ket[i] for i, mode in enumerate(state.modes) if mode in kept]
    out_axes += [bra[i] for i, mode in enumerate(state.modes) if mode in kept]
    res = np.einsum(t, ket + bra, out_axes)
    dims = tuple(state.dims[state.modes.index(mode)] for mode in kept)
    total = int(np.prod(dims))
    return FockDensity(tuple(kept), res.reshape(total, total), dims)


def project_occupation(state, mode: str, n: int):
    """Project one mode onto occupation |n> and drop it.

    Returns the unnormalized reduced state; its norm (squared norm for pure
    states, trace for densities) is the projection probability relative to
    the input weight.
    """
    if isinstance(state, FockState):
        ax = state.axis(mode)
        amps = np.take(state.amps, n, axis=ax)
        modes = state.modes[:ax] + state.modes[ax + 1:]
        return FockState(modes, amps)
    if isinstance(state, FockDensity):
        ax = state.axis(mode)
        m = len(state.modes)
        t = state.tensor()
        t = np.take(np.take(t, n, axis=m + ax), n, axis=ax)
        modes = state.modes[:ax] + state.modes[ax + 1:]
        dims = state.dims[:ax] + state.dims[ax + 1:]
        total = int(np.prod(dims))
        return FockDensity(modes, t.reshape(total, total), dims)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def expectation_number(state, mode: str) -> float:
    """Expectation of the number operator on one mode (normalized)."""
    if isinstance(state, FockState):
        ax = state.axis(mode)
        p = np.abs(state.amps) ** 2
        axes = tuple(i for i in range(p.ndim) if i != ax)
        marg = p.sum(axis=axes)
        return float((marg @ np.arange(len(marg))) / p.sum())
    if isinstance(state, FockDensity):
        ax = state.axis(mode)
        m = len(state.modes)
        t = state.tensor()
        ket = list(range(m))
        marg = np.einsum(t, ket + ket, [ax]).real
        return float((marg @ np.arange(len(marg))) / marg.sum())
    raise TypeError(f"unsupported state type {type(state).__name__}")
