"""Single-rail qubit layer: post-selection, target states, spin Hamiltonians.

Qubit i corresponds to emitted mode b_{i+1}; vacuum encodes |0>, one photon
encodes |1>, and higher occupations are discarded by post-selection.  Basis
indices are row-major over (q0, q1, ...), i.e. qubit 0 is the most
significant bit.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .fock import FockDensity, FockState


class PostSelectionError(ValueError):
    """Post-selection retained zero probability."""


# Conditioning below this probability is numerically meaningless (the
# retained amplitudes are floating-point dust) and raises instead.
MIN_CONDITION_PROBABILITY = 1e-14


@dataclass
class QubitState:
    """Normalized pure qubit state with its accumulated retention probability."""

    amps: np.ndarray
    postselection_probability: float = 1.0

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        n = self.amps.size
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("amplitude length must be a power of two")
        norm = np.linalg.norm(self.amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError("qubit states are stored normalized")

    @property
    def n_qubits(self) -> int:
        return int(self.amps.size).bit_length() - 1

    def density(self) -> "QubitDensity":
        return QubitDensity(
            np.outer(self.amps, self.amps.conj()), self.postselection_probability
        )

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n_qubits)


@dataclass
class QubitDensity:
    """Unit-trace qubit density matrix with its retention probability."""

    mat: np.ndarray
    postselection_probability: float = 1.0

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=np.complex128)
        n = self.mat.shape[0]
        if self.mat.shape != (n, n) or (n & (n - 1)) != 0:
            raise ValueError("density must be square with power-of-two size")
        if abs(np.trace(self.mat).real - 1.0) > 1e-10:
            raise ValueError("qubit densities are stored with unit trace")

    @property
    def n_qubits(self) -> int:
        return int(self.mat.shape[0]).bit_length() - 1

    def density(self) -> "QubitDensity":
        return self

    def tensor(self) -> np.ndarray:
        return self.mat.reshape((2,) * (2 * self.n_qubits))


# ---------------------------------------------------------------------------
# post-selection


def project_single_rail(state):
    """Keep only occupations {0, 1} on every mode, renormalize, track the
    retained probability.  Returns a QubitState or QubitDensity."""
    if isinstance(state, FockState):
        m = len(state.modes)
        sub = state.amps[(slice(0, 2),) * m]
        total = state.norm_sq()
        kept = float(np.vdot(sub, sub).real)
        if total <= 0.0 or kept <= MIN_CONDITION_PROBABILITY * total:
            raise PostSelectionError("single-rail projection retained zero weight")
        return QubitState(sub.reshape(-1) / np.sqrt(kept), kept / total)
    if isinstance(state, FockDensity):
        m = len(state.modes)
        t = state.tensor()
        sub = t[(slice(0, 2),) * m * 2]
        total = state.trace()
        mat = sub.reshape(2**m, 2**m)
        kept = float(np.trace(mat).real)
        if total <= 0.0 or kept <= MIN_CONDITION_PROBABILITY * total:
            raise PostSelectionError("single-rail projection retained zero weight")
        return QubitDensity(mat / kept, kept / total)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def embed_single_rail(state: QubitState, modes, cutoff: int) -> FockState:
    """Embed a qubit state back into Fock space (|0>, |1> occupations)."""
    m = state.n_qubits
    modes = tuple(modes)
    if len(modes) != m:
        raise ValueError("mode count must match qubit count")
    amps = np.zeros((cutoff,) * m, dtype=np.complex128)
    amps[(slice(0, 2),) * m] = state.tensor()
    return FockState(modes, amps)


def condition_qubit(state, qubit: int, outcome: int):
    """Condition on a measurement outcome of one qubit and drop it."""
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    if isinstance(state, QubitState):
        t = np.take(state.tensor(), outcome, axis=qubit)
        kept = float(np.vdot(t, t).real)
        if kept <= MIN_CONDITION_PROBABILITY:
            raise PostSelectionError(f"conditioning on qubit {qubit}={outcome} has zero probability")
        return QubitState(t.reshape(-1) / np.sqrt(kept), state.postselection_probability * kept)
    if isinstance(state, QubitDensity):
        m = state.n_qubits
        t = np.take(np.take(state.tensor(), outcome, axis=m + qubit), outcome, axis=qubit)
        mat = t.reshape(2 ** (m - 1), 2 ** (m - 1))
        kept = float(np.trace(mat).real)
        if kept <= MIN_CONDITION_PROBABILITY:
            raise PostSelectionError(f"conditioning on qubit {qubit}={outcome} has zero probability")
        return QubitDensity(mat / kept, state.postselection_probability * kept)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _excitation_numbers(m: int) -> np.ndarray:
    idx = np.arange(2**m)
    counts = np.zeros(2**m, dtype=int)
    for b in range(m):
        counts += (idx >> b) & 1
    return counts


def project_excitation_sector(state, k: int):
    """Post-select on total excitation number k (keeps the qubit count)."""
    if isinstance(state, QubitState):
        mask = _excitation_numbers(state.n_qubits) == k
        amps = np.where(mask, state.amps, 0.0)
        kept = float(np.vdot(amps, amps).real)
        if kept <= MIN_CONDITION_PROBABILITY:
            raise PostSelectionError(f"no weight in the {k}-excitation sector")
        return QubitState(amps / np.sqrt(kept), state.postselection_probability * kept)
    if isinstance(state, QubitDensity):
        mask = _excitation_numbers(state.n_qubits) == k
        mat = state.mat * np.outer(mask, mask)
        kept = float(np.trace(mat).real)
        if kept <= MIN_CONDITION_PROBABILITY:
            raise PostSelectionError(f"no weight in the {k}-excitation sector")
        return QubitDensity(mat / kept, state.postselection_probability * kept)
    raise TypeError(f"unsupported state type {type(state).__name__}")


# ---------------------------------------------------------------------------
# target states


def w_state(m: int) -> QubitState:
    """Uniform single-excitation superposition on m qubits."""
    if m < 2:
        raise ValueError("W state needs at least 2 qubits")
    amps = np.zeros(2**m, dtype=np.complex128)
    for i in range(m):
        amps[1 << (m - 1 - i)] = 1.0
    return QubitState(amps / np.sqrt(m))


def heralded_w_weight(m: int, eta: complex) -> float:
    """Squared norm of the heralded-W superposition before normalization."""
    return 1.0 + m * abs(eta) ** 2


def target_heralded_w(m: int, eta: complex) -> QubitState:
    """Vacuum plus eta-weighted single excitations, flagged by a herald qubit.

    Lives on m+1 qubits with the herald last: |0..0>|0> + eta sum_i |e_i>|1>.
    Conditioning on herald=1 yields the m-qubit W state; herald=0 yields
    vacuum.
    """
    if m < 2:
        raise ValueError("need at least 2 qubits beside the herald")
    if abs(eta) >= 1.0:
        raise ValueError("|eta| must be below 1")
    amps = np.zeros(2 ** (m + 1), dtype=np.complex128)
    amps[0] = 1.0
    for i in range(m):
        amps[(1 << (m - i)) + 1] = eta
    return QubitState(amps / np.sqrt(heralded_w_weight(m, eta)))


def diluted_ghz_weight(eta: complex) -> float:
    return 1.0 + 2.0 * abs(eta) ** 2


def target_diluted_ghz(eta: complex) -> QubitState:
    """|0000> + eta (|0011> + |1100>) on four qubits, normalized.

    The two-excitation sector is the relabelled GHZ state for any eta != 0.
    """
    amps = np.zeros(16, dtype=np.complex128)
    amps[0b0000] = 1.0
    amps[0b0011] = eta
    amps[0b1100] = eta
    return QubitState(amps / np.sqrt(diluted_ghz_weight(eta)))


def ghz_two_excitation() -> QubitState:
    """(|0011> + |1100>)/sqrt(2), the relabelled four-qubit GHZ state."""
    amps = np.zeros(16, dtype=np.complex128)
    amps[0b0011] = 1.0
    amps[0b1100] = 1.0
    return QubitState(amps / np.sqrt(2.0))


# ---------------------------------------------------------------------------
# spin Hamiltonians

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli_matrix(label: str) -> np.ndarray:
    return _PAULI[label].copy()


def pauli_string_matrix(pauli: str) -> np.ndarray:
    return reduce(np.kron, (_PAULI[c] for c in pauli))


@dataclass
class SpinHamiltonian:
    """Real combination of Pauli strings; Hermitian by construction."""

    n_qubits: int
    terms: list[tuple[float, str]]

    def __post_init__(self):
        cleaned = []
        for coeff, pauli in self.terms:
            if len(pauli) != self.n_qubits:
                raise ValueError(f"Pauli string {pauli!r} length != {self.n_qubits}")
            if any(c not in _PAULI for c in pauli):
                raise ValueError(f"invalid Pauli string {pauli!r}")
            cleaned.append((float(coeff), str(pauli)))
        self.terms = cleaned

    def matrix(self) -> np.ndarray:
        acc = np.zeros((2**self.n_qubits, 2**self.n_qubits), dtype=np.complex128)
        for coeff, pauli in self.terms:
            acc += coeff * pauli_string_matrix(pauli)
        return acc


def _pauli_string(m: int, placements: dict[int, str]) -> str:
    return "".join(placements.get(i, "I") for i in range(m))


def build_xy_hamiltonian(m: int, j: float, b: float, boundary: str = "open") -> SpinHamiltonian:
    """Isotropic XY chain: J sum (X X + Y Y) on bonds plus (B/4) sum Z."""
    if m < 2:
        raise ValueError("need at least 2 sites")
    if boundary not in ("open", "periodic"):
        raise ValueError("boundary must be 'open' or 'periodic'")
    bonds = [(i, i + 1) for i in range(m - 1)]
    if boundary == "periodic":
        bonds.append((m - 1, 0))
    terms = []
    if j != 0.0:
        for i, k in bonds:
            terms.append((j, _pauli_string(m, {i: "X", k: "X"})))
            terms.append((j, _pauli_string(m, {i: "Y", k: "Y"})))
    if b != 0.0:
        for i in range(m):
            terms.append((b / 4.0, _pauli_string(m, {i: "Z"})))
    return SpinHamiltonian(m, terms)


def build_heisenberg_hamiltonian(m: int, j: float, b: float, boundary: str = "open") -> SpinHamiltonian:
    """Heisenberg chain: the XY terms plus J Z Z on every bond."""
    ham = build_xy_hamiltonian(m, j, b, boundary)
    bonds = [(i, i + 1) for i in range(m - 1)]
    if boundary == "periodic":
        bonds.append((m - 1, 0))
    extra = [(j, _pauli_string(m, {i: "Z", k: "Z"})) for i, k in bonds]
    return SpinHamiltonian(m, ham.terms + extra)


# Parameters for which the 4-site periodic XY chain has the W state as its
# unique ground state; located by scripts/xy_w_regime_sweep.py (W plateau
# spans -7.75 < B < -3.4 at J = -1; B = -5.5 maximizes the gap).
XY_W_REGIME = {"m": 4, "J": -1.0, "B": -5.5, "boundary": "periodic"}


def xy_w_regime_hamiltonian() -> SpinHamiltonian:
    p = XY_W_REGIME
    return build_xy_hamiltonian(p["m"], p["J"], p["B"], p["boundary"])


def ground_state(ham: SpinHamiltonian) -> tuple[float, QubitState]:
    """Exact diagonalization; returns (energy, normalized eigenvector)."""
    w, v = np.linalg.eigh(ham.matrix())
    return float(w[0]), QubitState(v[:, 0])


# ---------------------------------------------------------------------------
# fidelity and expectations


def fidelity(a, b: QubitState) -> float:
    """<b| rho_a |b> for a pure or mixed first argument."""
    if not isinstance(b, QubitState):
        raise TypeError("second argument must be a pure QubitState")
    if isinstance(a, QubitState):
        if a.n_qubits != b.n_qubits:
            raise ValueError("qubit count mismatch")
        return float(abs(np.vdot(b.amps, a.amps)) ** 2)
    if isinstance(a, QubitDensity):
        if a.n_qubits != b.n_qubits:
            raise ValueError("qubit count mismatch")
        return float((b.amps.conj() @ a.mat @ b.amps).real)
    raise TypeError(f"unsupported state type {type(a).__name__}")


def pauli_expectation(state, pauli: str) -> float:
    """Exact <P> for a Pauli string on a pure or mixed qubit state."""
    if isinstance(state, QubitState):
        if len(pauli) != state.n_qubits:
            raise ValueError("Pauli string length mismatch")
        t = state.tensor()
        out = t
        for i, c in enumerate(pauli):
            if c != "I":
                out = np.moveaxis(
                    np.tensordot(_PAULI[c], out, axes=([1], [i])), 0, i
                )
        return float(np.vdot(t, out).real)
    if isinstance(state, QubitDensity):
        if len(pauli) != state.n_qubits:
            raise ValueError("Pauli string length mismatch")
        return float(np.trace(pauli_string_matrix(pauli) @ state.mat).real)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def energy_expectation(state, ham: SpinHamiltonian) -> float:
    """Exact tr(rho H) via the term list."""
    return float(sum(c * pauli_expectation(state, p) for c, p in ham.terms))
