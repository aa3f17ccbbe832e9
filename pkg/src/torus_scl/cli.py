"""Command-line entry point: ``torus-scl <subcommand> --scenario cfg.json --out dir``.

Exit codes: 0 when every check in the run passes, 1 when a check fails,
2 for usage and configuration errors.  Each run writes its artifacts and a
``manifest.json`` (config hash, package versions, tolerances, output
digests).  Files are written through a temporary name and renamed, and
contain no timestamps, so identical inputs give identical bytes.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import hashlib
import json
import math
import os
import platform
import sys

import numpy as np

from . import __version__
from ._validation import ConfigError, as_number
from .decay import (
    SCHEME_ENVELOPE_C, THETA_DECAY, THETA_STALL, DecayClassifier, decay_curve, traveling_wave, wave_l1_error,
)
from .flux import check_nd2
from .microscope import (
    HMeasureEstimator, SphereBins, check_hmeasure_properties, young_estimate,
)
from .microscope.localization import localization_mass
from .microscope.rescale import rescale_sequence, rescaled_sample_times
from .scenario import Scenario
from .solver import CONSERVATION_TOL, MAXIMUM_PRINCIPLE_TOL, cell_centers, mean, solve
from .suite import ORDER_MIN, run_suite

SUBCOMMANDS = ("solve", "nd2", "decay", "wave", "microscope", "suite")
MONOTONE_TOL = 1e-12

TOLERANCES = {
    "conservation": CONSERVATION_TOL,
    "maximum_principle": MAXIMUM_PRINCIPLE_TOL,
    "l1_monotone": MONOTONE_TOL,
    "theta_decay": THETA_DECAY,
    "theta_stall": THETA_STALL,
    "scheme_envelope_C": SCHEME_ENVELOPE_C,
    "wave_order_min": ORDER_MIN,
}


# -- output ---------------------------------------------------------------

def _clean(obj):
    """Make ``obj`` strict-JSON: numpy scalars to Python, NaN/inf to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path, text):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _versions():
    import scipy
    import sklearn
    import sympy

    return {
        "torus_scl": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "sympy": sympy.__version__,
    }


def write_outputs(out_dir, subcommand, scenario, artifacts, passed, tolerances):
    os.makedirs(out_dir, exist_ok=True)
    digests = {}
    for name in sorted(artifacts):
        text = artifacts[name]
        write_atomic(os.path.join(out_dir, name), text)
        digests[name] = hashlib.sha256(text.encode()).hexdigest()
    manifest = {
        "subcommand": subcommand,
        "config_hash": scenario.config_hash,
        "seed": scenario.seed,
        "versions": _versions(),
        "tolerances": tolerances,
        "outputs": digests,
        "passed": bool(passed),
    }
    write_atomic(os.path.join(out_dir, "manifest.json"), dumps(manifest))


# -- subcommands ----------------------------------------------------------

def _e_monotone(report):
    return bool(np.all(np.diff(report.e_values) <= MONOTONE_TOL))


def cmd_solve(sc, threads):
    flux, u0, T = sc.flux, sc.initial_field(), sc.T
    traj = solve(flux, u0, T, sc.sample_times, cfl=sc.cfl, viscosity=sc.viscosity)
    rep = decay_curve(traj)
    I0 = mean(traj.fields[0])
    drift = max(abs(mean(u) - I0) for u in traj.fields)
    summary = {
        "dims": list(traj.dims), "T": T, "n_steps": traj.n_steps, "dt_max": traj.dt_max,
        "mean": I0, "conservation_drift": drift, "e_non_increasing": _e_monotone(rep),
    }
    ok = drift <= CONSERVATION_TOL and summary["e_non_increasing"]
    return {"trajectory.csv": traj.to_csv(), "decay.csv": rep.to_csv(), "solve.json": dumps(summary)}, ok


def _nd2_mean(sc, block):
    if "I" in block:
        return as_number(block["I"], "nd2.I")
    if "initial" in sc.doc:
        return sc.initial_mean()
    raise ConfigError("missing (or give initial data)", "nd2.I")


def _expect(block, value):
    want = block.get("expect")
    return True if want is None else want == value


def cmd_nd2(sc, threads):
    block = sc.block("nd2")
    rep = check_nd2(sc.flux, sc.lattice, _nd2_mean(sc, block), block.get("R"))
    out = rep.to_json()
    return {"nd2.json": dumps(out)}, _expect(block, rep.verdict)


def _refinement_dims(sc, block, name):
    refs = block.get("refinements")
    if refs is None:
        base = sc.dims
        return [base, tuple(2 * N for N in base), tuple(4 * N for N in base)]
    if not isinstance(refs, list) or len(refs) < 2:
        raise ConfigError("need a list of at least two grids", f"{name}.refinements")
    dims = []
    for i, r in enumerate(refs):
        d = (r,) if isinstance(r, int) else tuple(r)
        dims.append(sc.check_dims(d, f"{name}.refinements[{i}]"))
    return dims


def cmd_decay(sc, threads):
    block = sc.block("decay")
    flux, T, times = sc.flux, sc.T, sc.sample_times
    dims = _refinement_dims(sc, block, "decay")

    def run(d):
        return decay_curve(solve(flux, sc.initial_field(d), T, times, cfl=sc.cfl, viscosity=sc.viscosity))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        reports = list(pool.map(run, dims))
    td = float(block.get("theta_decay", THETA_DECAY))
    ts = float(block.get("theta_stall", THETA_STALL))
    clf = DecayClassifier(td, ts).fit(reports)
    artifacts = {}
    rows = []
    for d, rep in zip(dims, reports):
        tag = "x".join(str(N) for N in d)
        artifacts[f"decay_{tag}.csv"] = rep.to_csv()
        rows.append({"dims": list(d), "terminal_ratio": rep.terminal_ratio, "e_non_increasing": _e_monotone(rep)})
    verdict = {
        "classification": clf.predict(), "thresholds": {"theta_decay": td, "theta_stall": ts},
        "refinements": rows, "T": T, "mean": reports[0].mean,
    }
    artifacts["decay.json"] = dumps(verdict)
    ok = all(r["e_non_increasing"] for r in rows) and _expect(block, clf.predict())
    return artifacts, ok


def cmd_wave(sc, threads):
    block = sc.block("wave")
    flux, lattice = sc.flux, sc.lattice
    I = _nd2_mean(sc, block)
    R = block.get("R")
    wave = traveling_wave(flux, lattice, I, R)
    rep = check_nd2(flux, lattice, I, R)
    if wave is None:
        out = {"wave": "none", "verdict": rep.verdict}
        return {"wave.json": dumps(out)}, _expect(block, "none")
    T = float(as_number(block.get("T", sc.doc.get("T", 0.25)), "wave.T"))
    n = lattice.dimension
    refs = block.get("refinements", [[100], [200]] if n == 1 else [[32] * n, [64] * n])
    dims = [sc.check_dims((r,) if isinstance(r, int) else tuple(r), f"wave.refinements[{i}]")
            for i, r in enumerate(refs)]
    C = float(block.get("C", SCHEME_ENVELOPE_C))

    def run(d):
        return wave_l1_error(solve(flux, wave.initial_field(d), T, cfl=sc.cfl), wave)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        errors = list(pool.map(run, dims))
    rows = []
    for d, e in zip(dims, errors):
        h = 1.0 / min(d)
        rows.append({"dims": list(d), "l1_error": e, "envelope": C * math.sqrt(h)})
    orders = []
    for a, b in zip(errors, errors[1:]):
        orders.append(None if a <= 1e-12 or b <= 0 else math.log2(a / b))
    ok = all(r["l1_error"] <= r["envelope"] for r in rows) and all(o is None or o >= ORDER_MIN for o in orders)
    out = {
        "wave": {
            "xi": [str(c) for c in wave.xi], "a": str(wave.a), "b": str(wave.b), "delta": wave.delta,
            "mean": str(wave.mean), "mode": list(wave.mode), "initial": wave.descriptor(),
        },
        "verdict": rep.verdict, "T": T, "refinements": rows, "orders": orders,
    }
    return {"wave.json": dumps(out)}, ok and _expect(block, "wave")


def _bins(spec, dim):
    if spec in (None, "default"):
        return SphereBins.default(dim)
    if spec == "points":
        return SphereBins.points()
    for name, make in (("arcs", SphereBins.arcs), ("icosahedral", SphereBins.icosahedral)):
        if isinstance(spec, str) and spec.startswith(name + "(") and spec.endswith(")"):
            try:
                return make(int(spec[len(name) + 1:-1]))
            except ValueError:
                break
    raise ConfigError(f"unknown bins {spec!r}", "microscope.bins")


def _int_list(block, key, default):
    vals = block.get(key, default)
    if not isinstance(vals, list) or not vals or any(isinstance(v, bool) or not isinstance(v, int) for v in vals):
        raise ConfigError("expected a list of integers", f"microscope.{key}")
    return vals


def _static_sequence(sc, block, r_list):
    source = block.get("source", "sine")
    dims = tuple(block.get("grid", sc.doc.get("grid", [4096])))
    sc.check_dims(dims, "microscope.grid", match_lattice=False)
    ys = cell_centers(dims)
    if source == "sine":
        omega = block.get("omega", [1] + [0] * (len(dims) - 1))
        amp = float(block.get("amplitude", 1.0))
        arg = sum(int(c) * y for c, y in zip(omega, ys))
        return [amp * np.sin(2 * np.pi * r * arg) for r in r_list], omega
    if source == "fixed":
        v = sc.initial_field(dims).data
        return [v.copy() for _ in r_list], None
    raise ConfigError(f"unknown source {source!r}", "microscope.source")


def cmd_microscope(sc, threads):
    block = sc.block("microscope")
    source = block.get("source", "sine")
    time_axis = source in ("trajectory", "wave")
    m_list = _int_list(block, "m_list", [2] if time_axis else [4, 8, 16])
    lattice = None
    omega = None
    if time_axis:
        lattice = sc.lattice
        k_list = _int_list(block, "k_list", [2, 4, 8])
        eval_shape = tuple(_int_list(block, "eval_shape", [32] + [32] * lattice.dimension))
        if source == "wave":
            I = _nd2_mean(sc, block)
            src = traveling_wave(sc.flux, lattice, I, block.get("R"))
            if src is None:
                raise ConfigError("criterion holds at this mean; no wave to rescale", "microscope.source")
        else:
            times = rescaled_sample_times(k_list, eval_shape[0])
            src = solve(sc.flux, sc.initial_field(), max(k_list), times, cfl=sc.cfl)
        fields = rescale_sequence(src, k_list, eval_shape)
        r_list = k_list
    else:
        r_list = _int_list(block, "r_list", [8, 16, 32, 64])
        fields, omega = _static_sequence(sc, block, r_list)
    ndim = fields[0].ndim
    windows = block.get("windows", 1)
    p_grid = block.get("p_grid")
    if isinstance(p_grid, list):
        p_grid = [float(as_number(p, f"microscope.p_grid[{i}]")) for i, p in enumerate(p_grid)]
    young = young_estimate(fields, p_grid=p_grid, windows=windows, n_levels=int(block.get("n_levels", 17)))
    est = HMeasureEstimator(m_list, block.get("center"), _bins(block.get("bins"), ndim), windows,
                            time_axis=time_axis, lattice=lattice)
    H = est.fit(fields, r_list, young).matrix_
    props = check_hmeasure_properties(H, young)
    directions = None
    if omega is not None and ndim > 1:
        directions = [omega, [-c for c in omega]]
    elif omega is not None:
        directions = [[1], [-1]]
    artifacts = {
        "hmeasure.json": dumps(H.to_json()),
        "ladder.csv": H.ladder_csv(directions),
        "young.json": dumps(young.to_json()),
        "properties.json": dumps(props.to_json()),
    }
    ok = props.passed
    if time_axis:
        tol = float(block.get("angular_tol", 0.1))
        R = float(block.get("R_s0", 1.5))
        rows = []
        for m in H.m_list:
            for r in H.r_list:
                rep = localization_mass(H.level(m, r), lattice, tol, R)
                rows.append(dict(m=m, k=r, **rep.to_json()))
        artifacts["localization.json"] = dumps({"ladder": rows})
        if "min_fraction" in block:
            ok &= rows[-1]["fraction"] >= float(block["min_fraction"])
    elif directions is not None and "min_concentration" in block:
        ok &= H.concentration(directions) >= float(block["min_concentration"])
    return artifacts, ok


def cmd_suite(sc, threads):
    block = sc.block("suite")
    results = run_suite(sc.seed, threads, bool(block.get("quick", False)))
    out = {"checks": [r.to_json() for r in results], "passed": all(r.passed for r in results)}
    return {"suite.json": dumps(out)}, out["passed"]


COMMANDS = {
    "solve": cmd_solve, "nd2": cmd_nd2, "decay": cmd_decay,
    "wave": cmd_wave, "microscope": cmd_microscope, "suite": cmd_suite,
}


def run_scenario(path, subcommand, overrides=(), out_dir="out", threads=1, seed=None):
    """Run one subcommand and write its artifacts; returns the exit code."""
    if subcommand not in COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}", "subcommand")
    sc = Scenario.load(path, overrides, seed) if path else Scenario.from_dict({}, seed=seed)
    artifacts, passed = COMMANDS[subcommand](sc, threads)
    write_outputs(out_dir, subcommand, sc, artifacts, passed, TOLERANCES)
    return 0 if passed else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="torus-scl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=name != "suite", help="scenario JSON file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path override, repeatable")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None):
    """Entry point; returns 0 (all checks pass), 1 (a check failed) or 2 (usage or config error)."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    if args.seed is not None and not 0 <= args.seed < 1 << 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return run_scenario(args.scenario, args.subcommand, args.override, args.out, args.threads, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
