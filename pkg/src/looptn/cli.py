"""Command-line driver: simulations, optimizations and parameter sweeps.

Every command takes a YAML config plus a handful of overriding flags and
writes its artifacts (state dumps, programs, CSV tables, a JSON summary)
into the output directory.  Identical config and seed produce byte-identical
outputs.  Exit codes: 0 success, 2 config error, 3 numerical-threshold abort.
"""

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import encoding as enc
from . import serialize as ser
from . import varopt
from .circuit import (
    LatticeMap2D,
    LoopProgram,
    Termination,
    emitted_mode_schedule,
    run_density,
    simulate_density,
    simulate_pure,
)
from .fock import TruncationError
from .measurement import ShotPlan
from .mps import extract_mps
from .serialize import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# config helpers


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


def _resolve_program(cfg: dict, base: Path) -> LoopProgram:
    if "program_file" in cfg:
        path = base / str(cfg["program_file"])
        try:
            return ser.loads_program(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read program file: {exc}") from None
    if "program" in cfg:
        return ser.program_from_dict(cfg["program"])
    raise ConfigError("config needs 'program' or 'program_file'")


def _template_from_config(cfg: dict) -> tuple[LoopProgram, varopt.ParameterSpace]:
    tpl = cfg.get("template")
    if not isinstance(tpl, dict):
        raise ConfigError("config needs a 'template' mapping")
    try:
        n_cycles = int(tpl["n_cycles"])
    except KeyError:
        raise ConfigError("template needs 'n_cycles'") from None
    r_max = float(tpl.get("r_max", 0.45))
    space = varopt.ParameterSpace(n_cycles, r_max=r_max)
    doc = {k: v for k, v in tpl.items() if k not in ("n_cycles", "r_max")}
    doc["cycles"] = [
        {"r": 0.0, "eta_phase": 0.0, "theta": 0.0, "phi": 0.0, "lam": 0.0}
        for _ in range(n_cycles)
    ]
    program = ser.program_from_dict(doc)
    return program, space


def _optimizer_settings(cfg: dict, seed_override=None) -> varopt.OptimizerSettings:
    opt = cfg.get("optimizer", {})
    if not isinstance(opt, dict):
        raise ConfigError("'optimizer' must be a mapping")
    kwargs = {}
    for key in ("max_evaluations", "restarts", "seed"):
        if key in opt:
            kwargs[key] = int(opt[key])
    for key in ("fatol", "xatol", "target_objective"):
        if key in opt and opt[key] is not None:
            kwargs[key] = float(opt[key])
    settings = varopt.OptimizerSettings(**kwargs)
    if seed_override is not None:
        settings = dataclasses.replace(settings, seed=int(seed_override))
    return settings


def _target_from_config(cfg: dict) -> enc.QubitState:
    tgt = cfg.get("target")
    if not isinstance(tgt, dict) or "kind" not in tgt:
        raise ConfigError("config needs a 'target' mapping with a 'kind'")
    kind = tgt["kind"]
    if kind == "heralded_w":
        return enc.target_heralded_w(int(tgt["m"]), complex(float(tgt["eta"])))
    if kind == "diluted_ghz":
        return enc.target_diluted_ghz(complex(float(tgt["eta"])))
    if kind == "w":
        return enc.w_state(int(tgt["m"]))
    if kind == "ghz_two_excitation":
        return enc.ghz_two_excitation()
    raise ConfigError(f"unknown target kind {kind!r}")


def _postselect_from_config(cfg: dict):
    ps = cfg.get("postselect")
    if ps is None:
        return None
    if not isinstance(ps, dict):
        raise ConfigError("'postselect' must be a mapping")
    if "herald" in ps:
        h = ps["herald"]
        return ("herald", int(h["qubit"]), int(h.get("outcome", 1)))
    if "sector" in ps:
        return ("sector", int(ps["sector"]))
    raise ConfigError("'postselect' needs 'herald' or 'sector'")


def _apply_postselect(state, spec):
    if spec is None:
        return state
    if spec[0] == "herald":
        return enc.condition_qubit(state, spec[1], spec[2])
    return enc.project_excitation_sector(state, spec[1])


def _shots_from_config(cfg: dict, shots_override=None, seed_override=None):
    shots = cfg.get("shots", "exact")
    if shots_override is not None:
        shots = shots_override
    if shots in ("exact", None):
        return None
    seed = int(cfg.get("shots_seed", 0) if seed_override is None else seed_override)
    return ShotPlan(int(shots), seed=seed)


def _loss_grid(cfg: dict, override=None):
    if override is not None:
        text = override
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            return [round(x, 10) for x in np.arange(start, stop + step / 2, step)]
        return [float(x) for x in text.split(",")]
    grid = cfg.get("loss_grid")
    if isinstance(grid, dict):
        return [
            round(float(x), 10)
            for x in np.arange(
                float(grid["start"]),
                float(grid["stop"]) + float(grid["step"]) / 2,
                float(grid["step"]),
            )
        ]
    if isinstance(grid, list):
        return [float(x) for x in grid]
    raise ConfigError("config needs a 'loss_grid' (list or start/stop/step)")


def _write(outdir: Path, name: str, text: str) -> None:
    (outdir / name).write_text(text)


def _summary(outdir: Path, payload: dict) -> None:
    _write(outdir, "summary.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: dict, outdir: Path, args) -> None:
    program = _resolve_program(cfg, Path(args.config).parent)
    payload = {"command": "simulate", "n_cycles": program.n_cycles}
    if program.loss_per_cycle == 0.0 and program.termination is Termination.PROJECT_VACUUM:
        out = simulate_pure(program)
        state_text = ser.dumps_state(out.state)
        payload.update(
            backend="pure",
            norm_sq=out.state.norm_sq(),
            success_probability=out.success_probability,
            max_squeezer_leakage=out.max_squeezer_leakage,
            bond_truncation_weight=out.bond_truncation_weight,
        )
    else:
        out = simulate_density(program)
        state_text = ser.dumps_density(out.density)
        payload.update(
            backend="density",
            trace=out.density.trace(),
            success_probability=out.success_probability,
            max_squeezer_leakage=out.max_squeezer_leakage,
            bond_truncation_weight=out.bond_truncation_weight,
        )
    _write(outdir, "state.txt", state_text)
    _summary(outdir, payload)


def cmd_extract_mps(cfg: dict, outdir: Path, args) -> None:
    program = _resolve_program(cfg, Path(args.config).parent)
    mps = extract_mps(program)
    _write(outdir, "mps.txt", ser.dumps_mps(mps))
    _summary(
        outdir,
        {
            "command": "extract-mps",
            "sites": mps.n_sites,
            "bond_dims": list(mps.bond_dims),
            "physical_dims": list(mps.physical_dims),
            "norm_sq": mps.norm_sq(),
        },
    )


def cmd_optimize_state(cfg: dict, outdir: Path, args) -> None:
    template, space = _template_from_config(cfg)
    target = _target_from_config(cfg)
    post = _postselect_from_config(cfg)
    condition = (post[1], post[2]) if post is not None and post[0] == "herald" else None
    settings = _optimizer_settings(cfg, args.seed)
    objective = varopt.InfidelityObjective(template, space, target, condition=condition)
    run = varopt.minimize(varopt.circuit_run(objective, space, settings, "fidelity"))
    best = run.best_params
    best_program = dataclasses.replace(template, cycles=space.unpack(best))
    _write(outdir, "best_program.yaml", ser.dumps_program(best_program))
    _write(outdir, "trace.csv", ser.trace_to_csv(run.trace, space.n_cycles))
    _summary(
        outdir,
        {
            "command": "optimize-state",
            "best_infidelity": run.best_value,
            "best_fidelity": 1.0 - run.best_value,
            "converged": run.converged,
            "n_evaluations": run.n_evaluations,
            "restarts_run": run.restarts_run,
        },
    )


def cmd_optimize_ground(cfg: dict, outdir: Path, args) -> None:
    template, space = _template_from_config(cfg)
    ham = ser.hamiltonian_from_dict(cfg.get("hamiltonian", {}))
    herald = cfg.get("herald")
    herald = None if herald is None else int(herald)
    plan = _shots_from_config(cfg, args.shots, args.seed)
    settings = _optimizer_settings(cfg)
    objective = varopt.EnergyObjective(template, space, ham, plan=plan, herald=herald)
    run = varopt.minimize(varopt.circuit_run(objective, space, settings, "energy"))
    best_program = dataclasses.replace(template, cycles=space.unpack(run.best_params))

    exact_energy, gs = enc.ground_state(ham)
    state = varopt.generate_qubit_state(best_program)
    if herald is not None:
        state = enc.condition_qubit(state, herald, 1)
    fidelity_gs = enc.fidelity(state, gs)
    energy = enc.energy_expectation(state, ham)

    _write(outdir, "best_program.yaml", ser.dumps_program(best_program))
    _write(outdir, "trace.csv", ser.trace_to_csv(run.trace, space.n_cycles))
    _summary(
        outdir,
        {
            "command": "optimize-ground",
            "shots": None if plan is None else plan.shots_per_observable,
            "best_objective": run.best_value,
            "energy_of_returned_state": energy,
            "exact_ground_energy": exact_energy,
            "fidelity_with_ground_state": fidelity_gs,
            "converged": run.converged,
            "n_evaluations": run.n_evaluations,
            "restarts_run": run.restarts_run,
        },
    )


def _loss_point(packed):
    """One sweep point: fixed-parameter fidelity and optional re-optimization."""
    (program_doc, loss, target_amps, post, opt_kwargs, self_correct, space_args) = packed
    program = ser.program_from_dict(program_doc)
    program = dataclasses.replace(program, loss_per_cycle=loss)
    target = enc.QubitState(np.asarray(target_amps))
    space = varopt.ParameterSpace(space_args[0], r_max=space_args[1])
    condition = (post[1], post[2]) if post is not None and post[0] == "herald" else None

    def fixed_fidelity(prog):
        state = varopt.generate_qubit_state(prog)
        if post is not None:
            state = _apply_postselect(state, post)
        return enc.fidelity(state, target)

    f_fixed = fixed_fidelity(program)
    if not self_correct:
        return loss, f_fixed, None

    objective = varopt.InfidelityObjective(program, space, target, condition=condition)
    if post is not None and post[0] == "sector":
        objective = _SectorInfidelityObjective(program, space, target, post[1])
    settings = varopt.OptimizerSettings(**opt_kwargs)
    warm = space.pack(program.cycles)
    run = varopt.minimize(
        varopt.circuit_run(objective, space, settings, "fidelity", warm_starts=[warm])
    )
    return loss, f_fixed, 1.0 - run.best_value


class _SectorInfidelityObjective:
    """Infidelity after projecting onto a fixed total-excitation sector."""

    def __init__(self, template, space, target, sector):
        self.template = template
        self.space = space
        self.target = target
        self.sector = sector
        self.last_standard_error = None

    def __call__(self, x):
        program = dataclasses.replace(self.template, cycles=self.space.unpack(x))
        try:
            state = varopt.generate_qubit_state(program)
            state = enc.project_excitation_sector(state, self.sector)
        except (TruncationError, enc.PostSelectionError):
            return varopt.PENALTY_VALUE
        return 1.0 - enc.fidelity(state, self.target)


def cmd_sweep_loss(cfg: dict, outdir: Path, args) -> None:
    program = _resolve_program(cfg, Path(args.config).parent)
    target = _target_from_config(cfg)
    post = _postselect_from_config(cfg)
    grid = _loss_grid(cfg, args.loss)
    self_correct = bool(cfg.get("self_correct", True))
    settings = _optimizer_settings(cfg, args.seed)
    opt_kwargs = dataclasses.asdict(settings)
    space_args = (program.n_cycles, float(cfg.get("template", {}).get("r_max", 0.45)))

    jobs = [
        (
            ser.program_to_dict(program),
            float(loss),
            [complex(a) for a in target.amps],
            post,
            opt_kwargs,
            self_correct,
            space_args,
        )
        for loss in grid
    ]
    results = _run_jobs(_loss_point, jobs, args.threads)

    rows = []
    for loss, f_fixed, f_corr in results:
        rows.append([loss, float(f_fixed), "" if f_corr is None else float(f_corr)])
    _write(
        outdir,
        "sweep_loss.csv",
        ser.csv_table(["loss", "fidelity_fixed", "fidelity_selfcorrected"], rows),
    )
    payload = {
        "command": "sweep-loss",
        "grid": [float(x) for x in grid],
        "fidelity_fixed": [float(r[1]) for r in rows],
        "self_correct": self_correct,
    }
    if self_correct:
        payload["fidelity_selfcorrected"] = [float(r[2]) for r in rows]
        ratios = []
        for _, f_fixed, f_corr in results:
            if f_corr is not None and f_corr < 1.0 and f_fixed < 1.0:
                ratios.append((1.0 - f_fixed) / max(1.0 - f_corr, 1e-15))
        payload["max_infidelity_improvement_ratio"] = max(ratios) if ratios else None
    _summary(outdir, payload)


def _shots_point(packed):
    (template_doc, space_args, ham_doc, herald, shots, shots_seed, opt_kwargs) = packed
    template = ser.program_from_dict(template_doc)
    space = varopt.ParameterSpace(space_args[0], r_max=space_args[1])
    ham = ser.hamiltonian_from_dict(ham_doc)
    plan = None if shots is None else ShotPlan(int(shots), seed=int(shots_seed))
    objective = varopt.EnergyObjective(template, space, ham, plan=plan, herald=herald)
    settings = varopt.OptimizerSettings(**opt_kwargs)
    run = varopt.minimize(varopt.circuit_run(objective, space, settings, "energy"))
    program = dataclasses.replace(template, cycles=space.unpack(run.best_params))
    state = varopt.generate_qubit_state(program)
    if herald is not None:
        state = enc.condition_qubit(state, herald, 1)
    _, gs = enc.ground_state(ham)
    return enc.fidelity(state, gs)


def cmd_sweep_shots(cfg: dict, outdir: Path, args) -> None:
    template, space = _template_from_config(cfg)
    ham_doc = cfg.get("hamiltonian", {})
    ser.hamiltonian_from_dict(ham_doc)  # validate early
    herald = cfg.get("herald")
    herald = None if herald is None else int(herald)
    grid = cfg.get("shots_grid")
    if not isinstance(grid, list) or not grid:
        raise ConfigError("config needs a non-empty 'shots_grid' list")
    seeds = cfg.get("seeds", [0, 1, 2, 3, 4])
    settings = _optimizer_settings(cfg)

    jobs = []
    labels = []
    for shots in grid:
        shots_val = None if shots in ("exact", None) else int(shots)
        for seed in seeds:
            opt_kwargs = dataclasses.asdict(
                dataclasses.replace(settings, seed=settings.seed + int(seed))
            )
            jobs.append(
                (
                    ser.program_to_dict(template),
                    (space.n_cycles, space.r_max),
                    ham_doc,
                    herald,
                    shots_val,
                    int(seed),
                    opt_kwargs,
                )
            )
            labels.append((shots if shots_val is not None else "exact", int(seed)))
    fidelities = _run_jobs(_shots_point, jobs, args.threads)

    rows = []
    means = {}
    for (shots, seed), f in zip(labels, fidelities):
        rows.append([shots, seed, float(f)])
        means.setdefault(shots, []).append(float(f))
    for shots in dict.fromkeys(s for s, _ in labels):
        rows.append([shots, "mean", float(np.mean(means[shots]))])
    _write(outdir, "sweep_shots.csv", ser.csv_table(["shots", "seed", "fidelity"], rows))
    _summary(
        outdir,
        {
            "command": "sweep-shots",
            "shots_grid": list(grid),
            "seeds": [int(s) for s in seeds],
            "mean_fidelity": {str(k): float(np.mean(v)) for k, v in means.items()},
        },
    )


def cmd_lattice_map(cfg: dict, outdir: Path, args) -> None:
    try:
        m = int(cfg["m"])
        lattice = LatticeMap2D(int(cfg["n"]), int(cfg["ntilde"]))
        coords = emitted_mode_schedule(m, lattice)
    except KeyError as exc:
        raise ConfigError(f"lattice-map config missing key {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [[k, r, c] for k, (r, c) in enumerate(coords)]
    _write(outdir, "lattice.csv", ser.csv_table(["emission_index", "row", "col"], rows))
    _summary(
        outdir,
        {
            "command": "lattice-map",
            "m": m,
            "n": lattice.n,
            "ntilde": lattice.ntilde,
            "rows": int(max(r for r, _ in coords)) + 1,
        },
    )


def _run_jobs(fn, jobs, threads):
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, int(threads))
    if threads == 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


COMMANDS = {
    "simulate": cmd_simulate,
    "extract-mps": cmd_extract_mps,
    "optimize-state": cmd_optimize_state,
    "optimize-ground": cmd_optimize_ground,
    "sweep-loss": cmd_sweep_loss,
    "sweep-shots": cmd_sweep_shots,
    "lattice-map": cmd_lattice_map,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="looptn",
        description="Loop-circuit simulator and variational optimizer for "
        "temporal-mode entangled light",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument(
            "--out",
            default=None,
            help="output directory (default: $LOOPTN_OUT or current directory)",
        )
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--shots", default=None, help="shots per observable or 'exact'")
        p.add_argument("--loss", default=None, help="loss grid: 'a:b:step' or 'a,b,c'")
        p.add_argument("--threads", type=int, default=None, help="sweep worker count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outdir = Path(args.out or os.environ.get("LOOPTN_OUT", "."))
    try:
        cfg = _load_config(args.config)
        outdir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, outdir, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
