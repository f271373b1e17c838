"""Classical half of the variational loop: derivative-free bounded search
over per-cycle circuit parameters.

Parameters are flattened as (|eta|, arg eta, theta, phi, lam) per cycle.
Objectives run the loop program, post-select to single-rail qubits and
score the result; zero-probability post-selection and truncation aborts
return a large finite penalty so the optimizer can retreat.  The search
itself is Nelder-Mead under box constraints with seeded random restarts.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .circuit import CycleParams, LoopProgram, Termination, run_branches, run_pure
from .encoding import (
    PostSelectionError,
    QubitDensity,
    QubitState,
    SpinHamiltonian,
    condition_qubit,
    energy_expectation,
    fidelity,
    project_single_rail,
)
from .fock import SqueezeParam, Su2Param, TruncationError
from .measurement import ShotPlan, estimate_energy

# Objective value returned when a parameter point cannot be scored.
PENALTY_VALUE = 1.0e6

PARAMS_PER_CYCLE = 5


@dataclass(frozen=True)
class ParameterSpace:
    """Box-bounded flattening of per-cycle circuit controls."""

    n_cycles: int
    r_max: float = 2.0

    @property
    def n_params(self) -> int:
        return PARAMS_PER_CYCLE * self.n_cycles

    def bounds(self) -> list[tuple[float, float]]:
        per_cycle = [
            (0.0, self.r_max),
            (-np.pi, np.pi),
            (0.0, np.pi),
            (-np.pi, np.pi),
            (-np.pi, np.pi),
        ]
        return per_cycle * self.n_cycles

    def pack(self, cycles) -> np.ndarray:
        out = []
        for cp in cycles:
            out += [cp.eta.r, cp.eta.phase, cp.v.theta, cp.v.phi, cp.v.lam]
        return np.asarray(out, dtype=float)

    def unpack(self, x) -> tuple[CycleParams, ...]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {x.shape}")
        cycles = []
        for i in range(self.n_cycles):
            r, phase, theta, phi, lam = x[5 * i : 5 * i + 5]
            eta = SqueezeParam(r * np.exp(1j * phase), r_max=max(self.r_max, 2.0))
            cycles.append(CycleParams(eta, Su2Param(theta, phi, lam)))
        return tuple(cycles)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        """Random start: pump magnitudes away from the vacuum saddle."""
        x = np.empty(self.n_params)
        hi = min(0.5, self.r_max)
        for i in range(self.n_cycles):
            x[5 * i] = rng.uniform(0.05, hi)
            x[5 * i + 1] = rng.uniform(-np.pi, np.pi)
            x[5 * i + 2] = rng.uniform(0.0, np.pi)
            x[5 * i + 3] = rng.uniform(-np.pi, np.pi)
            x[5 * i + 4] = rng.uniform(-np.pi, np.pi)
        return x


def generate_qubit_state(program: LoopProgram):
    """Run a program and post-select to the single-rail qubit space.

    Lossless projected runs return a pure QubitState; lossy or traced runs
    return a QubitDensity assembled from Kraus branches (never the dense
    Fock-space density matrix).
    """
    m = program.n_cycles
    if program.loss_per_cycle == 0.0 and program.termination is Termination.PROJECT_VACUUM:
        return project_single_rail(run_pure(program))
    branches = run_branches(program)
    if not branches:
        raise PostSelectionError("no branch survived the run")
    dim = 2**m
    acc = np.zeros((dim, dim), dtype=np.complex128)
    total = 0.0
    for b in branches:
        total += b.norm_sq()
        sub = b.amps[(slice(0, 2),) * m].reshape(-1)
        acc += np.outer(sub, sub.conj())
    kept = float(np.trace(acc).real)
    if kept <= 0.0 or total <= 0.0:
        raise PostSelectionError("single-rail projection retained zero weight")
    return QubitDensity(acc / kept, kept / total)


class EnergyObjective:
    """Energy of the generated, post-selected state under a Hamiltonian.

    ``herald`` names a qubit conditioned on |1> before scoring (and dropped),
    matching the heralded preparation of excitation-carrying states.

    With a ShotPlan the energy is sampled from the Born distribution.  By
    default the random draws are frozen across evaluations (sample-average
    approximation): the optimizer then descends one deterministic noisy
    surface whose bias shrinks as 1/sqrt(shots), instead of chasing fresh
    fluctuations whose running minimum is biased low.  ``resample=True``
    switches to independent draws per evaluation.  ``last_standard_error``
    exposes the sampling noise of the most recent evaluation for tolerance
    coupling.
    """

    def __init__(self, template: LoopProgram, space: ParameterSpace,
                 ham: SpinHamiltonian, plan: ShotPlan | None = None,
                 herald: int | None = None, resample: bool = False):
        if template.n_cycles != space.n_cycles:
            raise ValueError("template cycle count must match the parameter space")
        self.template = template
        self.space = space
        self.ham = ham
        self.plan = plan
        self.herald = herald
        self.resample = resample
        self.eval_counter = 0
        self.last_standard_error: float | None = None

    def __call__(self, x) -> float:
        counter = self.eval_counter
        self.eval_counter += 1
        program = dataclasses.replace(self.template, cycles=self.space.unpack(x))
        try:
            state = generate_qubit_state(program)
            if self.herald is not None:
                state = condition_qubit(state, self.herald, 1)
        except (TruncationError, PostSelectionError):
            self.last_standard_error = None
            return PENALTY_VALUE
        if self.plan is None:
            self.last_standard_error = None
            return energy_expectation(state, self.ham)
        plan = self.plan.child(counter) if self.resample else self.plan
        try:
            est = estimate_energy(state, self.ham, plan)
        except PostSelectionError:
            self.last_standard_error = None
            return PENALTY_VALUE
        # the 2x-standard-error tolerance floor only concerns resampled
        # noise; the frozen surface is deterministic and may be converged
        # to the configured tolerance
        self.last_standard_error = est.standard_error if self.resample else None
        return est.value


class InfidelityObjective:
    """1 - fidelity between the generated state and a fixed qubit target.

    Computed exactly from the simulated (possibly lossy) state.  ``condition``
    optionally post-selects one qubit on an outcome before comparing, e.g.
    conditioning away a herald.
    """

    def __init__(self, template: LoopProgram, space: ParameterSpace,
                 target: QubitState, condition: tuple[int, int] | None = None):
        if template.n_cycles != space.n_cycles:
            raise ValueError("template cycle count must match the parameter space")
        self.template = template
        self.space = space
        self.target = target
        self.condition = condition
        self.last_standard_error: float | None = None

    def __call__(self, x) -> float:
        program = dataclasses.replace(self.template, cycles=self.space.unpack(x))
        try:
            state = generate_qubit_state(program)
            if self.condition is not None:
                state = condition_qubit(state, *self.condition)
        except (TruncationError, PostSelectionError):
            return PENALTY_VALUE
        return 1.0 - fidelity(state, self.target)


@dataclass
class OptimizerSettings:
    """Budget and termination controls for the restart runner."""

    max_evaluations: int = 5000
    restarts: int = 8
    seed: int = 0
    fatol: float = 1e-9
    xatol: float = 1e-5
    target_objective: float | None = None


@dataclass
class VariationalRun:
    """One optimization task plus, after ``minimize``, its full outcome."""

    objective: object
    bounds: list[tuple[float, float]]
    settings: OptimizerSettings
    kind: str = "custom"
    init_sampler: object = None
    warm_starts: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    best_params: np.ndarray | None = None
    best_value: float = np.inf
    restart_results: list = field(default_factory=list)
    converged: bool = False
    n_evaluations: int = 0
    restarts_run: int = 0


def circuit_run(objective, space: ParameterSpace, settings: OptimizerSettings,
                kind: str, warm_starts=()) -> VariationalRun:
    return VariationalRun(
        objective=objective,
        bounds=space.bounds(),
        settings=settings,
        kind=kind,
        init_sampler=space.random,
        warm_starts=[np.asarray(w, dtype=float) for w in warm_starts],
    )


def minimize(run: VariationalRun) -> VariationalRun:
    """Bounded Nelder-Mead with seeded random restarts.

    Every evaluation lands in ``run.trace``; the best point seen anywhere
    (including warm starts) is returned.  When the objective reports a
    sampling standard error, the function tolerance is widened to at least
    twice that noise floor so termination stays meaningful.
    """
    settings = run.settings
    bounds = [(float(lo), float(hi)) for lo, hi in run.bounds]
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def default_sampler(rng):
        return rng.uniform(lo, hi)

    sampler = run.init_sampler or default_sampler

    def wrapped(x):
        value = float(run.objective(np.asarray(x, dtype=float)))
        run.trace.append((np.array(x, dtype=float), value))
        if value < run.best_value:
            run.best_value = value
            run.best_params = np.array(x, dtype=float)
        return value

    for restart in range(settings.restarts):
        if restart < len(run.warm_starts):
            x0 = np.clip(run.warm_starts[restart], lo, hi)
        else:
            rng = np.random.default_rng(np.random.SeedSequence((settings.seed, restart)))
            x0 = np.clip(sampler(rng), lo, hi)

        probe = wrapped(x0)
        fatol = settings.fatol
        se = getattr(run.objective, "last_standard_error", None)
        if se is not None and probe < PENALTY_VALUE:
            fatol = max(fatol, 2.0 * se)

        budget = settings.max_evaluations - 1  # the probe counted
        if budget > 0:
            result = _scipy_minimize(
                wrapped,
                x0,
                method="Nelder-Mead",
                bounds=bounds,
                options=dict(
                    maxfev=budget,
                    maxiter=10**9,
                    fatol=fatol,
                    xatol=settings.xatol,
                    adaptive=True,
                ),
            )
            run.converged = run.converged or bool(result.success)
            run.restart_results.append((np.array(result.x, dtype=float), float(result.fun)))
        else:
            run.restart_results.append((np.array(x0, dtype=float), float(probe)))
        run.restarts_run = restart + 1
        if (
            settings.target_objective is not None
            and run.best_value <= settings.target_objective
        ):
            break

    run.n_evaluations = len(run.trace)
    return run


def best_so_far(trace) -> np.ndarray:
    """Running minimum of the objective along a trace."""
    vals = np.array([v for _, v in trace])
    return np.minimum.accumulate(vals)


def select_final_candidate(run: VariationalRun) -> np.ndarray:
    """Pick among the restarts' converged points by re-scoring them.

    Needed when the objective resamples its noise per evaluation: the
    running trace minimum is then biased low (thousands of independent
    draws select for lucky fluctuations), so candidates are the restart
    endpoints, compared with one more scoring pass.  For deterministic or
    frozen-noise objectives ``run.best_params`` is already well defined.
    """
    if not run.restart_results:
        raise ValueError("run has no restart results; call minimize first")
    scores = [float(run.objective(x)) for x, _ in run.restart_results]
    return np.array(run.restart_results[int(np.argmin(scores))][0], dtype=float)
