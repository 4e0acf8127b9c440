"""Invariant suites behind the verify command.

Four families of checks, each returning named results with the measured
worst-case value, the tolerance it was held to, and a human description
of the worst offender:

  gradients          analytic forces vs central differences of the energy
  cross_variant      all kernel variants against the Reference kernel
  width_independence vector kernels across lane widths, plus the strict
                     W=1 bit-identity claim against ScalarOpt
  conservation       short NVE: energy drift, force sum, momentum

`run_verification` composes them into one report dict (JSON-safe) whose
`passed` field is the AND of every check. Tolerances scale with
`tol_scale`, so 0 turns every inequality into an impossible bar; that is
deliberate, it proves the thresholds are live.
"""

import math

import numpy as np

from .kernels import compute, make_variant
from .neighbor import build_neighbor_list
from .simd import EMULATED_WIDTHS
from .system import run_nve, RunConfig, seed_velocities, total_momentum


class CheckResult:
    """One named invariant check: measured value vs tolerance."""

    def __init__(self, name, passed, measured, tolerance, worst=""):
        self.name = name
        self.passed = bool(passed)
        self.measured = measured
        self.tolerance = tolerance
        self.worst = worst

    @property
    def margin(self):
        """tolerance / measured; > 1 means the check passed with room."""
        if self.measured is None or self.tolerance is None:
            return None
        if self.measured == 0.0:
            return math.inf
        return self.tolerance / self.measured

    def as_dict(self):
        m = self.margin
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": None if self.measured is None else float(self.measured),
            "tolerance": None if self.tolerance is None else float(self.tolerance),
            "margin": float(m) if m is not None and math.isfinite(m) else None,
            "worst": self.worst,
        }

    def __repr__(self):
        state = "PASS" if self.passed else "FAIL"
        return f"<{state} {self.name}: {self.measured} vs {self.tolerance}>"


def _guard(name, fn):
    """Run one suite; an exception becomes a failed check naming it."""
    try:
        return fn()
    except Exception as exc:  # noqa: BLE001 - report, never crash the suite
        return [CheckResult(name, False, None, None,
                            worst=f"{type(exc).__name__}: {exc}")]


def _finite_or_raise(res, label):
    if not (np.isfinite(res.forces).all()
            and math.isfinite(res.potential_energy)):
        raise ArithmeticError(f"non-finite energy/forces from {label}")


# ---------------------------------------------------------------------
# gradient check
# ---------------------------------------------------------------------

def check_gradients(state, params, variant=None, probes=4, step=2e-4,
                    tol=1e-6, tol_scale=1.0, skin=0.3, seed=0):
    """Analytic forces vs 4th-order central differences of the energy.

    A handful of probe atoms is enough to catch a broken derivative
    chain; errors there are systematic, not localized. The step is
    large enough that double-precision roundoff (~eps*|E|/step) sits
    well below the tolerance on significant components, and small
    enough that the O(step^4) truncation term does too. Components
    below 1e-2 eV/A are skipped: relative error is meaningless at the
    noise floor.
    """
    variant = variant or make_variant("ScalarOpt")
    nl = build_neighbor_list(state, params.r_cut, skin)
    base = compute(state, nl, params, variant)
    _finite_or_raise(base, variant.describe())

    rng = np.random.default_rng(seed)
    atoms = rng.choice(state.natoms, size=min(probes, state.natoms),
                       replace=False)
    probe = state.copy()
    tolerance = tol * tol_scale
    worst_rel, worst_txt, checked = 0.0, "no significant components", 0
    for a in atoms:
        for ax in range(3):
            x0 = probe.positions[a, ax]
            samples = []
            for mult in (-2.0, -1.0, 1.0, 2.0):
                probe.positions[a, ax] = x0 + mult * step
                samples.append(compute(probe, nl, params,
                                       variant).potential_energy)
            probe.positions[a, ax] = x0
            em2, em1, ep1, ep2 = samples
            fd = -(em2 - 8.0 * em1 + 8.0 * ep1 - ep2) / (12.0 * step)
            analytic = base.forces[a, ax]
            if abs(analytic) <= 1e-2:
                continue
            checked += 1
            rel = abs(fd - analytic) / abs(analytic)
            if rel > worst_rel:
                worst_rel = rel
                worst_txt = (f"atom {a} axis {ax}: analytic {analytic:.8e}"
                             f" vs fd {fd:.8e}")
    return [CheckResult("gradient_fd", worst_rel <= tolerance and checked > 0,
                        worst_rel, tolerance,
                        worst=f"{worst_txt} ({checked} components)")]


# ---------------------------------------------------------------------
# cross-variant equivalence
# ---------------------------------------------------------------------

def check_cross_variant(state, params, tol_energy=1e-10, tol_force=1e-8,
                        tol_scale=1.0, width=8, skin=0.3, threads=1):
    """Every variant against the Reference kernel, double precision."""
    nl = build_neighbor_list(state, params.r_cut, skin)
    ref = compute(state, nl, params, make_variant("Reference"), threads)
    _finite_or_raise(ref, "Reference")
    others = [
        make_variant("ScalarOpt"),
        make_variant("VecJ", "emulated", width),
        make_variant("VecI", "emulated", width),
        make_variant("VecJ", "native"),
        make_variant("VecI", "native"),
    ]
    e_tol = tol_energy * tol_scale
    f_tol = tol_force * tol_scale
    e_worst, e_txt = 0.0, ""
    f_worst, f_txt = 0.0, ""
    e_scale = max(abs(ref.potential_energy), 1e-30)
    for var in others:
        res = compute(state, nl, params, var, threads)
        _finite_or_raise(res, var.describe())
        e_dev = abs(res.potential_energy - ref.potential_energy) / e_scale
        if e_dev > e_worst:
            e_worst, e_txt = e_dev, var.describe()
        df = np.abs(res.forces - ref.forces)
        f_dev = float(df.max()) if df.size else 0.0
        if f_dev > f_worst:
            flat = int(np.argmax(df))
            f_txt = f"{var.describe()} atom {flat // 3} axis {flat % 3}"
            f_worst = f_dev
    return [
        CheckResult("cross_variant_energy", e_worst <= e_tol, e_worst,
                    e_tol, worst=e_txt),
        CheckResult("cross_variant_forces", f_worst <= f_tol, f_worst,
                    f_tol, worst=f_txt),
    ]


# ---------------------------------------------------------------------
# width independence
# ---------------------------------------------------------------------

def check_width_independence(state, params, widths=EMULATED_WIDTHS,
                             tol=1e-12, tol_scale=1.0, skin=0.3):
    """Emulated-lane energies across widths, and strict-W=1 bit identity."""
    nl = build_neighbor_list(state, params.r_cut, skin)
    tolerance = tol * tol_scale
    out = []
    for tag in ("VecJ", "VecI"):
        energies = []
        for w in widths:
            res = compute(state, nl, params,
                          make_variant(tag, "emulated", w))
            _finite_or_raise(res, f"{tag} W={w}")
            energies.append(res.potential_energy)
        scale = max(abs(energies[0]), 1e-30)
        spread = (max(energies) - min(energies)) / scale
        out.append(CheckResult(
            f"width_independence_{tag.lower()}", spread <= tolerance,
            spread, tolerance,
            worst=f"widths {tuple(widths)}: min {min(energies)!r} "
                  f"max {max(energies)!r}"))

    scalar = compute(state, nl, params, make_variant("ScalarOpt"))
    for tag in ("VecJ", "VecI"):
        res = compute(state, nl, params,
                      make_variant(tag, "emulated", 1, strict=True))
        same = (res.forces.tobytes() == scalar.forces.tobytes()
                and res.potential_energy == scalar.potential_energy)
        df = np.abs(res.forces - scalar.forces)
        dev = float(df.max()) if df.size else 0.0
        out.append(CheckResult(
            f"strict_w1_bitwise_{tag.lower()}", same, dev, 0.0,
            worst="bit-identical" if same else
                  f"max force deviation {dev:.3e}"))
    return out


# ---------------------------------------------------------------------
# conservation
# ---------------------------------------------------------------------

def check_conservation(state, params, variant=None, steps=200, dt=0.5,
                       temperature=300.0, tol_drift=1e-4, tol_force=1e-9,
                       tol_momentum=1e-9, tol_scale=1.0, skin=0.3,
                       threads=1, seed=0):
    """Short NVE: relative energy drift, force sum, momentum drift.

    Seeds velocities when the state has none so the probe actually
    explores phase space; a frozen lattice conserves anything.
    """
    st = state.copy()
    if st.velocities is None or not st.velocities.any():
        seed_velocities(st, temperature, seed)
    p0 = total_momentum(st)
    cfg = RunConfig(dt=dt, steps=steps, variant=variant, skin=skin,
                    threads=threads)
    summary = run_nve(st, params, cfg)
    total = np.asarray(summary["total"])
    scale = max(abs(total[0]), 1e-30)
    drift = float(np.abs(total - total[0]).max() / scale)
    fmax = float(np.max(summary["force_sum_max"]))
    pdrift = float(np.abs(total_momentum(st) - p0).max())
    n = st.natoms
    return [
        CheckResult("nve_energy_drift", drift <= tol_drift * tol_scale,
                    drift, tol_drift * tol_scale,
                    worst=f"{steps} steps at dt={dt:g} fs"),
        CheckResult("nve_force_sum", fmax <= tol_force * n * tol_scale,
                    fmax, tol_force * n * tol_scale,
                    worst="max |sum_i F_i| component over the run"),
        CheckResult("nve_momentum", pdrift <= tol_momentum * n * tol_scale,
                    pdrift, tol_momentum * n * tol_scale,
                    worst="max |p_final - p_initial| component"),
    ]


# ---------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------

def run_verification(state, params, variant=None, tol_scale=1.0,
                     conservation_steps=200, dt=0.5, skin=0.3, threads=1,
                     seed=0):
    """Run every suite; return a JSON-safe report dict."""
    checks = []
    checks += _guard("gradient_fd", lambda: check_gradients(
        state, params, variant=variant, tol_scale=tol_scale, skin=skin,
        seed=seed))
    checks += _guard("cross_variant", lambda: check_cross_variant(
        state, params, tol_scale=tol_scale, skin=skin, threads=threads))
    checks += _guard("width_independence", lambda: check_width_independence(
        state, params, tol_scale=tol_scale, skin=skin))
    checks += _guard("conservation", lambda: check_conservation(
        state, params, variant=variant, steps=conservation_steps, dt=dt,
        tol_scale=tol_scale, skin=skin, threads=threads, seed=seed))
    return {
        "passed": all(c.passed for c in checks),
        "tol_scale": float(tol_scale),
        "natoms": int(state.natoms),
        "checks": [c.as_dict() for c in checks],
    }
