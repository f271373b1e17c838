"""Text formats for programs, states, MPS exports, Hamiltonians and traces.

All formats are plain text and round-trip exactly: floats are written with
repr precision.  Program and Hamiltonian files are YAML; state and MPS
dumps use simple line-oriented formats documented in the README.
"""

import csv
import io

import numpy as np
import yaml

from .circuit import CycleParams, LoopProgram, Termination
from .encoding import SpinHamiltonian, build_heisenberg_hamiltonian, build_xy_hamiltonian
from .fock import DEFAULT_LEAKAGE_THRESHOLD, FockDensity, FockState, SqueezeParam, Su2Param
from .mps import MpsState


class ConfigError(ValueError):
    """Malformed configuration or serialized document."""


# ---------------------------------------------------------------------------
# loop programs (YAML)


def cycle_to_dict(cp: CycleParams) -> dict:
    return {
        "r": float(cp.eta.r),
        "eta_phase": float(cp.eta.phase),
        "theta": float(cp.v.theta),
        "phi": float(cp.v.phi),
        "lam": float(cp.v.lam),
    }


def cycle_from_dict(d: dict) -> CycleParams:
    try:
        eta = SqueezeParam(float(d["r"]) * np.exp(1j * float(d.get("eta_phase", 0.0))))
        v = Su2Param(float(d["theta"]), float(d["phi"]), float(d["lam"]))
    except KeyError as exc:
        raise ConfigError(f"cycle entry missing key {exc}") from None
    return CycleParams(eta, v)


def program_to_dict(program: LoopProgram) -> dict:
    return {
        "cutoff": program.cutoff,
        "bond_cutoff": program.bond_cutoff,
        "loss_per_cycle": program.loss_per_cycle,
        "termination": program.termination.value,
        "loss_on_emitted": program.loss_on_emitted,
        "v_before_u": program.v_before_u,
        "leakage_threshold": program.leakage_threshold,
        "cycles": [cycle_to_dict(c) for c in program.cycles],
    }


def program_from_dict(d: dict) -> LoopProgram:
    if not isinstance(d, dict):
        raise ConfigError("program document must be a mapping")
    unknown = set(d) - {
        "cutoff", "bond_cutoff", "loss_per_cycle", "termination",
        "loss_on_emitted", "v_before_u", "leakage_threshold", "cycles",
    }
    if unknown:
        raise ConfigError(f"unknown program keys: {sorted(unknown)}")
    try:
        cycles = tuple(cycle_from_dict(c) for c in d["cycles"])
        return LoopProgram(
            cycles=cycles,
            cutoff=int(d["cutoff"]),
            bond_cutoff=None if d.get("bond_cutoff") is None else int(d["bond_cutoff"]),
            loss_per_cycle=float(d.get("loss_per_cycle", 0.0)),
            termination=Termination(d.get("termination", "project_vacuum")),
            loss_on_emitted=bool(d.get("loss_on_emitted", False)),
            v_before_u=bool(d.get("v_before_u", False)),
            leakage_threshold=float(d.get("leakage_threshold", DEFAULT_LEAKAGE_THRESHOLD)),
        )
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"program document missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid program document: {exc}") from None


def dumps_program(program: LoopProgram) -> str:
    return yaml.safe_dump(program_to_dict(program), sort_keys=True)


def loads_program(text: str) -> LoopProgram:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return program_from_dict(doc)


# ---------------------------------------------------------------------------
# dense states (line-oriented text)


def dumps_state(state: FockState) -> str:
    lines = ["looptn-state v1", "kind: pure", "modes: " + " ".join(state.modes)]
    lines.append("dims: " + " ".join(str(d) for d in state.dims))
    for idx in np.ndindex(*state.dims):
        a = state.amps[idx]
        if a != 0.0:
            occ = " ".join(str(i) for i in idx)
            lines.append(f"{occ}  {float(a.real)!r} {float(a.imag)!r}")
    return "\n".join(lines) + "\n"


def dumps_density(rho: FockDensity) -> str:
    lines = ["looptn-state v1", "kind: density", "modes: " + " ".join(rho.modes)]
    lines.append("dims: " + " ".join(str(d) for d in rho.dims))
    t = rho.tensor()
    m = len(rho.modes)
    for idx in np.ndindex(*t.shape):
        a = t[idx]
        if a != 0.0:
            ket = " ".join(str(i) for i in idx[:m])
            bra = " ".join(str(i) for i in idx[m:])
            lines.append(f"{ket} | {bra}  {float(a.real)!r} {float(a.imag)!r}")
    return "\n".join(lines) + "\n"


def loads_state(text: str):
    """Parse a state dump; returns FockState or FockDensity by its kind."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "looptn-state v1":
        raise ConfigError("not a looptn-state document")
    header = {}
    body_start = 1
    for ln in lines[1:]:
        if ":" in ln and not ln.strip()[0].isdigit():
            key, _, val = ln.partition(":")
            header[key.strip()] = val.strip()
            body_start += 1
        else:
            break
    try:
        kind = header["kind"]
        modes = tuple(header["modes"].split())
        dims = tuple(int(x) for x in header["dims"].split())
    except KeyError as exc:
        raise ConfigError(f"state document missing header {exc}") from None
    if len(modes) != len(dims):
        raise ConfigError("modes and dims length mismatch")
    if kind == "pure":
        amps = np.zeros(dims, dtype=np.complex128)
        for ln in lines[body_start:]:
            parts = ln.split()
            occ = tuple(int(x) for x in parts[: len(dims)])
            re_s, im_s = parts[len(dims):]
            amps[occ] = float(re_s) + 1j * float(im_s)
        return FockState(modes, amps)
    if kind == "density":
        t = np.zeros(dims + dims, dtype=np.complex128)
        m = len(dims)
        for ln in lines[body_start:]:
            left, _, right = ln.partition("|")
            ket = tuple(int(x) for x in left.split())
            parts = right.split()
            bra = tuple(int(x) for x in parts[:m])
            re_s, im_s = parts[m:]
            t[ket + bra] = float(re_s) + 1j * float(im_s)
        total = int(np.prod(dims))
        return FockDensity(modes, t.reshape(total, total), dims)
    raise ConfigError(f"unknown state kind {kind!r}")


# ---------------------------------------------------------------------------
# MPS export


def dumps_mps(mps: MpsState) -> str:
    lines = ["looptn-mps v1", f"sites: {mps.n_sites}"]

    def vec_line(name, v):
        flat = " ".join(f"{float(x.real)!r} {float(x.imag)!r}" for x in v)
        return f"{name}: {flat}"

    lines.append(vec_line("left", mps.left_boundary))
    lines.append(vec_line("right", mps.right_boundary))
    for i, a in enumerate(mps.site_tensors):
        lines.append(f"site {i} shape {a.shape[0]} {a.shape[1]} {a.shape[2]}")
        for x in a.reshape(-1):
            lines.append(f"{float(x.real)!r} {float(x.imag)!r}")
    return "\n".join(lines) + "\n"


def loads_mps(text: str) -> MpsState:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "looptn-mps v1":
        raise ConfigError("not a looptn-mps document")

    def parse_vec(ln, name):
        prefix = f"{name}: "
        if not ln.startswith(prefix):
            raise ConfigError(f"expected {name} boundary line")
        nums = [float(x) for x in ln[len(prefix):].split()]
        return np.array(nums[0::2]) + 1j * np.array(nums[1::2])

    try:
        n_sites = int(lines[1].split(":")[1])
    except (IndexError, ValueError):
        raise ConfigError("bad sites line") from None
    left = parse_vec(lines[2], "left")
    right = parse_vec(lines[3], "right")
    pos = 4
    tensors = []
    for i in range(n_sites):
        head = lines[pos].split()
        if head[:2] != ["site", str(i)] or head[2] != "shape":
            raise ConfigError(f"expected site {i} header")
        shape = tuple(int(x) for x in head[3:6])
        count = shape[0] * shape[1] * shape[2]
        vals = np.empty(count, dtype=np.complex128)
        for k in range(count):
            re_s, im_s = lines[pos + 1 + k].split()
            vals[k] = float(re_s) + 1j * float(im_s)
        tensors.append(vals.reshape(shape))
        pos += 1 + count
    return MpsState(tensors, left, right)


# ---------------------------------------------------------------------------
# Hamiltonians (YAML: preset or explicit terms)


def hamiltonian_from_dict(d: dict) -> SpinHamiltonian:
    if not isinstance(d, dict):
        raise ConfigError("hamiltonian document must be a mapping")
    if "preset" in d:
        preset = d["preset"]
        try:
            m = int(d["m"])
            j = float(d["J"])
            b = float(d["B"])
        except KeyError as exc:
            raise ConfigError(f"hamiltonian preset missing key {exc}") from None
        boundary = d.get("boundary", "open")
        if preset == "xy":
            return build_xy_hamiltonian(m, j, b, boundary)
        if preset == "heisenberg":
            return build_heisenberg_hamiltonian(m, j, b, boundary)
        raise ConfigError(f"unknown hamiltonian preset {preset!r}")
    try:
        m = int(d["qubits"])
        terms = [(float(c), str(p)) for c, p in d["terms"]]
        return SpinHamiltonian(m, terms)
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"hamiltonian document missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid hamiltonian document: {exc}") from None


def hamiltonian_to_dict(ham: SpinHamiltonian) -> dict:
    return {"qubits": ham.n_qubits, "terms": [[c, p] for c, p in ham.terms]}


def dumps_hamiltonian(ham: SpinHamiltonian) -> str:
    return yaml.safe_dump(hamiltonian_to_dict(ham), sort_keys=True)


def loads_hamiltonian(text: str) -> SpinHamiltonian:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return hamiltonian_from_dict(doc)


# ---------------------------------------------------------------------------
# optimization traces (CSV)

def trace_csv_header(n_cycles: int) -> list[str]:
    cols = ["evaluation"]
    for i in range(1, n_cycles + 1):
        cols += [f"r_{i}", f"eta_phase_{i}", f"theta_{i}", f"phi_{i}", f"lam_{i}"]
    cols.append("objective")
    return cols


def trace_to_csv(trace, n_cycles: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_csv_header(n_cycles))
    for k, (x, val) in enumerate(trace):
        writer.writerow([k] + [repr(float(p)) for p in x] + [repr(float(val))])
    return buf.getvalue()


def csv_table(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
