"""The example bundle run by ``torus-scl suite``.

Each check returns a :class:`CheckResult` with a pass flag and a
JSON-ready ``details`` dictionary.  Grid sizes and corpus sizes are
parameters so that the same code serves quick smoke runs and the full
acceptance runs.
"""

from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
import math

import numpy as np

from .corpus import microscope_corpus, wave_corpus
from .decay import (
    SCHEME_ENVELOPE_C, DecayClassifier, decay_curve, min_shift_distance, squeeze_check,
    traveling_wave, wave_l1_error,
)
from .flux import check_nd2, flux_from_spec
from .microscope import check_hmeasure_properties, hmeasure_estimate, young_estimate
from .solver import GridFlux, PeriodicField, solve

ORDER_MIN = 0.4
EXACT_ERROR = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {"name": self.name, "passed": bool(self.passed), "details": self.details}


def _abs_run(u0_func, N, T):
    flux = flux_from_spec("abs")
    u0 = PeriodicField.from_function(u0_func, (N,))
    return u0, solve(flux, u0, T, np.linspace(0, T, 7))


def check_abs_dichotomy(Ns=(100, 200, 400), T=3.0, C=SCHEME_ENVELOPE_C, threads=1):
    """``|u|`` flux: decay at mean zero, a translating profile at mean 1/2."""

    def run(args):
        tag, N = args
        if tag == "zero":
            return _abs_run(lambda x: np.sin(2 * np.pi * x), N, T)
        return _abs_run(lambda x: 0.5 + 0.3 * np.sin(2 * np.pi * x), N, T)

    jobs = [(tag, N) for tag in ("zero", "half") for N in Ns]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        out = list(pool.map(run, jobs))
    runs = dict(zip(jobs, out))
    zero = [decay_curve(runs[("zero", N)][1]) for N in Ns]
    half = [decay_curve(runs[("half", N)][1]) for N in Ns]
    cz = DecayClassifier().fit(zero)
    ch = DecayClassifier().fit(half)
    shifts = []
    for N in Ns:
        u0, traj = runs[("half", N)]
        d = min_shift_distance(traj.fields[-1], u0.data)
        shifts.append({"N": N, "distance": d, "envelope": C * math.sqrt(1.0 / N)})
    ok_a = cz.predict() == "decays" and all(r.terminal_ratio <= 0.2 for r in zero)
    ok_b = ch.predict() == "stalls" and all(s["distance"] <= s["envelope"] for s in shifts)
    return CheckResult("abs_dichotomy", ok_a and ok_b, {
        "mean_zero": {"classification": cz.predict(), "ratios": [float(r) for r in cz.ratios_]},
        "mean_half": {"classification": ch.predict(), "ratios": [float(r) for r in ch.ratios_], "shift": shifts},
        "T": T, "C": C,
    })


def check_squeeze(Ns=(200, 400), T=1.0, C=SCHEME_ENVELOPE_C):
    """Ordering along characteristics of ``|u|`` for sine data."""
    rows, ok = [], True
    for N in Ns:
        u0 = PeriodicField.from_function(lambda x: np.sin(2 * np.pi * x), (N,))
        rep = squeeze_check(u0, T, C=C)
        ok &= rep.passed
        rows.append({
            "N": N, "lower": float(rep.lower_violation.max()), "upper": float(rep.upper_violation.max()),
            "tolerance": rep.tolerance, "passed": rep.passed,
        })
    return CheckResult("squeeze", ok, {"runs": rows, "C": C})


def wave_case(flux, lattice, I, T=0.25, C=SCHEME_ENVELOPE_C):
    """Criterion verdict, wave existence and the injected-wave error for one case.

    The grids are scaled by the largest integer mode ``q`` of the wave and the
    run time by ``1 / (q alpha)``, ``alpha`` the global viscosity, so that every
    wave is injected at the same resolution per wavelength and the same
    amount of numerical diffusion.
    """
    rep = check_nd2(flux, lattice, I)
    wave = traveling_wave(flux, lattice, I)
    row = {"n": lattice.dimension, "I": str(I), "verdict": rep.verdict, "wave": wave is not None}
    ok = (wave is not None) == (rep.verdict == "violated")
    if wave is not None:
        n = lattice.dimension
        q = max(abs(int(c)) for c in wave.mode)
        g = GridFlux(flux, lattice)
        lo, hi = float(wave.mean) - wave.delta, float(wave.mean) + wave.delta
        alpha = max(g.slope_bound(lo, hi, d) for d in range(n))
        T_case = T / max(1.0, q * alpha)
        Ns = tuple(q * b for b in ((100, 200) if n == 1 else (32, 64)))
        errs = []
        for N in Ns:
            traj = solve(flux, wave.initial_field((N,) * n), T_case)
            errs.append(wave_l1_error(traj, wave))
        env = [C * math.sqrt(1.0 / N) for N in Ns]
        exact = errs[0] <= EXACT_ERROR
        order = None if exact or errs[1] <= 0 else math.log2(errs[0] / errs[1])
        ok &= all(e <= b for e, b in zip(errs, env)) and (exact or order >= ORDER_MIN)
        row.update({"mode": list(wave.mode), "speed": float(wave.a), "grids": list(Ns), "T": T_case, "errors": errs, "envelope": env, "order": order})
    row["passed"] = bool(ok)
    return row


def check_wave_roundtrip(seed=0, count=50, T=0.25, threads=1):
    cases = wave_corpus(seed, count)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda c: wave_case(*c, T=T), cases))
    n_waves = sum(r["wave"] for r in rows)
    return CheckResult("wave_roundtrip", all(r["passed"] for r in rows) and n_waves > 0,
                       {"cases": rows, "count": count, "waves": n_waves, "seed": seed})


def microscope_case(r_list, fields):
    nd = fields[0].ndim
    windows = 8 if nd == 2 else 16
    m_list = (4, 8) if nd == 2 else (4, 8, 16)
    young = young_estimate(fields, windows=windows)
    H = hmeasure_estimate(fields, young=young, r_list=r_list, m_list=m_list)
    rep = check_hmeasure_properties(H, young)
    return {"dims": list(fields[0].shape), "r_list": list(r_list), "report": rep.to_json()}


def check_microscope_properties(seed=0, count=20, threads=1):
    cases = microscope_corpus(seed, count)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda c: microscope_case(*c), cases))
    return CheckResult("microscope_properties", all(r["report"]["passed"] for r in rows),
                       {"cases": rows, "count": count, "seed": seed})


def run_suite(seed=0, threads=1, quick=False):
    """All bundle checks in a fixed order."""
    if quick:
        return [
            check_abs_dichotomy(Ns=(100, 200), T=3.0, threads=threads),
            check_squeeze(Ns=(200,)),
            check_wave_roundtrip(seed, count=10, threads=threads),
            check_microscope_properties(seed, count=4, threads=threads),
        ]
    return [
        check_abs_dichotomy(threads=threads),
        check_squeeze(),
        check_wave_roundtrip(seed, threads=threads),
        check_microscope_properties(seed, threads=threads),
    ]
