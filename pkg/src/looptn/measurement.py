"""Finite-shot observable estimation on post-selected qubit states.

Shots are drawn from the exact Born distribution of each Pauli observable.
``shots_per_observable`` counts measurements performed; when the state
carries a post-selection probability below one, a binomially distributed
subset survives post-selection and only those enter the estimate (both
counts are reported).  All randomness flows through numpy's PCG64
generator seeded by SeedSequence tuples (plan seed, spawn key, observable
index), so estimates are reproducible and independent of scheduling.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .encoding import PostSelectionError, SpinHamiltonian, pauli_expectation


@dataclass(frozen=True)
class ShotPlan:
    """Number of measurements per observable and the random seed."""

    shots_per_observable: int
    seed: int = 0
    spawn_key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.shots_per_observable < 1:
            raise ValueError("need at least one shot per observable")

    def child(self, *keys: int) -> "ShotPlan":
        """Plan with extra entropy folded in (e.g. an evaluation counter)."""
        return replace(self, spawn_key=self.spawn_key + tuple(int(k) for k in keys))

    def rng(self, observable_index: int) -> np.random.Generator:
        entropy = (self.seed,) + self.spawn_key + (observable_index,)
        return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass
class PauliEstimate:
    pauli: str
    mean: float
    standard_error: float
    shots_performed: int
    shots_used: int


@dataclass
class EnergyEstimate:
    """Linear combination of per-term estimates; errors add in quadrature."""

    value: float
    standard_error: float
    terms: list[tuple[float, PauliEstimate]] = field(default_factory=list)


def sample_pauli(state, pauli: str, plan: ShotPlan, observable_index: int = 0) -> PauliEstimate:
    """Estimate <P> from plan.shots_per_observable Born-rule samples.

    Deterministic given (plan, observable_index).  Raises
    PostSelectionError when every performed shot fails post-selection.
    """
    exact = pauli_expectation(state, pauli)
    p_plus = min(max((1.0 + exact) / 2.0, 0.0), 1.0)
    n = plan.shots_per_observable
    rng = plan.rng(observable_index)
    p_ps = float(getattr(state, "postselection_probability", 1.0))
    if p_ps < 1.0:
        used = int(rng.binomial(n, p_ps))
    else:
        used = n
    if used == 0:
        raise PostSelectionError(
            f"all {n} shots failed post-selection (p = {p_ps:.3g})"
        )
    outcomes = np.where(rng.random(used) < p_plus, 1.0, -1.0)
    mean = float(outcomes.mean())
    if used > 1:
        se = float(outcomes.std(ddof=1) / np.sqrt(used))
    else:
        se = 0.0
    return PauliEstimate(pauli, mean, se, n, used)


def estimate_energy(state, ham: SpinHamiltonian, plan: ShotPlan | None) -> EnergyEstimate:
    """Energy of a state under a Pauli-term Hamiltonian.

    ``plan=None`` is the exact mode: every term is evaluated as tr(rho P)
    with zero error.  Otherwise each term is sampled independently with its
    own derived sub-seed.
    """
    terms = []
    if plan is None:
        value = 0.0
        for coeff, pauli in ham.terms:
            exact = pauli_expectation(state, pauli)
            terms.append((coeff, PauliEstimate(pauli, exact, 0.0, 0, 0)))
            value += coeff * exact
        return EnergyEstimate(float(value), 0.0, terms)

    value = 0.0
    var = 0.0
    for i, (coeff, pauli) in enumerate(ham.terms):
        est = sample_pauli(state, pauli, plan, observable_index=i)
        terms.append((coeff, est))
        value += coeff * est.mean
        var += (coeff * est.standard_error) ** 2
    return EnergyEstimate(float(value), float(np.sqrt(var)), terms)
