"""Verify the frozen monsoon calibration and write the shipped data file.

The closure constants below came out of an offline search over the reduced
drift family.  The search scored candidates on a present-day operating point
worth believing (soil moisture 40 mm, land-ocean contrast a few K, monsoon
precipitation tens of mm/day, humidity near 0.03), a fold comfortably above
the present-day albedo 0.47, a drift whose potential keeps the escape flux
going out the dry side rather than the domain edge behind the wet state, and
collapse dynamics slow enough that a 1-year albedo ramp reaching the fold has
absorbed only about a quarter of the density at noise 0.004.

The last target pins the drift geometry near the fold, not the moisture
inertia I_q: the fast-ramp escape at the fold is nearly independent of I_q.
I_q is chosen against the slow-ramp story instead (escape quiet for the
first two decades, half the density gone near albedo 0.496).

This script rebuilds the parameter set from those constants, re-measures
every target through the library, prints the evidence, and writes
src/tipwarn/data/monsoon_calibration.json.  Run from the repo root:

    python3 tools/tune_monsoon.py
"""

from __future__ import annotations

import json
import pathlib

import numpy as np

from tipwarn.grids import SpatialGrid, TimeGrid
from tipwarn.monsoon import (
    MonsoonDrift,
    MonsoonParams,
    MonsoonState,
    SECONDS_PER_DECADE,
    full_rhs,
    scan_bifurcation,
    soil_equilibrium,
    sweep_escape,
    temperature_equilibrium,
)
from tipwarn.solver import check_admissibility

# Frozen closure constants (SI: humidity fractions, mm, seconds, W/m^2).
# EVAP_OVER_RUNOFF is A/C; both are reconstructed from the 40 mm soil anchor.
PRECIP_PER_HUMIDITY = 0.01663069      # B, mm/s
EVAP_OVER_RUNOFF = 0.07570239         # A/C, K^-1 (dimension of 1/(contrast))
ADVECTION_COUPLING = 0.04264629       # G, mm/s per K per humidity
OCEAN_INFLOW_WEIGHT = 0.2             # g1
LAND_DEPLETION_WEIGHT = 0.10907633    # g2
OCEAN_HUMIDITY = 0.02232662           # q_oc
SATURATION_HUMIDITY = 0.05600955      # q_sat at the fixed surface temperature
LONGWAVE_SLOPE = 2.47449749           # H, W/m^2/K
LONGWAVE_OFFSET = -74.79115911        # J, W/m^2

MOISTURE_INERTIA = 2500.0             # I_q, tuned against the slow ramp
WET_EQUILIBRIUM_Q = 0.038103222       # stable humidity at A_sys = 0.47
WET_EQUILIBRIUM_CONTRAST = 4.512121297  # K, at the same point
SOIL_ANCHOR_MM = 40.0                 # w1 = w2 there

A_SYS0 = 0.47
DOMAIN = (-0.015, 0.045)
NOISE = 0.004
FAST_RAMP = 0.6      # albedo per decade; reaches the fold within a year
SLOW_RAMP = 0.006    # the ten-decade scenario
ESCAPE_BAND = (0.15, 0.35)   # fast-ramp cumulative escape at the fold


def build_params(i_q: float = MOISTURE_INERTIA) -> MonsoonParams:
    q, x = WET_EQUILIBRIUM_Q, WET_EQUILIBRIUM_CONTRAST
    wet = EVAP_OVER_RUNOFF * x * (SATURATION_HUMIDITY - q)
    c_runoff = PRECIP_PER_HUMIDITY * q / (
        SOIL_ANCHOR_MM * (wet + PRECIP_PER_HUMIDITY * q))
    return MonsoonParams(
        A=EVAP_OVER_RUNOFF * c_runoff, B=PRECIP_PER_HUMIDITY, C=c_runoff,
        G=ADVECTION_COUPLING, H=LONGWAVE_SLOPE, J=LONGWAVE_OFFSET, K=0.0,
        g1=OCEAN_INFLOW_WEIGHT, g2=LAND_DEPLETION_WEIGHT,
        I_q=i_q, I_T=1.0e7, L=2.5e6,
        f1=100.0, f2=1000.0, tau=100.0 * 86400.0,
        T_oc=300.0, q_oc=OCEAN_HUMIDITY, I0_cos_xi=1000.0,
        z1=0.0, z2=1500.0,
        gamma0=6.5e-3, gamma_t=0.0, gamma_q=0.0, gamma_a=9.8e-3,
        q_sat0=SATURATION_HUMIDITY, q_sat_slope=0.0, t_s_ref=313.0,
        t_s_offset=313.0, t_s_slope=0.0,
        A_sys0=A_SYS0,
    )


def main() -> None:
    p = build_params()

    # Bifurcation diagram; the scan must stay below the advection choke.
    scan_hi = min(0.044, 0.95 * p.g1 * p.q_oc / p.g2)
    curve = scan_bifurcation(p, np.linspace(0.002, scan_hi, 4201))
    print(f"fold: A_sys = {curve.fold_a:.5f} at q = {curve.fold_q:.5f}")

    drift = MonsoonDrift(p, a0=A_SYS0, eps=0.0, domain=DOMAIN)
    roots = drift.equilibria(0.0)
    print("equilibria at A_sys=0.47 (q, df/dq /decade):",
          [(f"{q:.5f}", f"{s:.1f}") for q, s in roots])
    q_s = drift.stable_equilibrium(0.0)
    q_u = drift.unstable_equilibrium(0.0)
    barrier = drift.barrier_height(0.0)
    edge = np.linspace(q_s, DOMAIN[1], 800)
    wall = float(-np.trapezoid(drift.f(edge, 0.0), edge))
    print(f"barrier/D = {barrier / NOISE:.2f}, edge wall/barrier = {wall / barrier:.2f}")

    # Reduction consistency: the 1-D drift equals the full dq/dt on the
    # (soil, temperature) equilibrium manifold.
    worst = 0.0
    for q in (0.01, 0.025, q_s):
        t_a = temperature_equilibrium(q, A_SYS0, p)
        w1, w2 = soil_equilibrium(q, t_a, p)
        _, _, dq_full, _ = full_rhs(MonsoonState(q, t_a, w1, w2), A_SYS0, p)
        f_red = float(drift.f(np.array([q]), 0.0)[0]) / SECONDS_PER_DECADE
        worst = max(worst, abs(dq_full - f_red))
    print(f"reduction residual (worst of 3 points): {worst:.3e} /s")

    x_now = temperature_equilibrium(q_s, A_SYS0, p) - p.T_oc
    w_now, _ = soil_equilibrium(q_s, p.T_oc + x_now, p)
    print(f"present day: q = {q_s:.5f}, contrast = {x_now:.3f} K, "
          f"soil = {w_now:.2f} mm, precip = {p.B * q_s * 86400:.1f} mm/day")

    print("running fast and slow ramps (a few minutes)...")
    fast, slow = sweep_escape(
        p, [("fast", A_SYS0, FAST_RAMP, 0.1), ("slow", A_SYS0, SLOW_RAMP, 10.0)],
        [NOISE])
    for r in (fast, slow):
        if r.error:
            raise SystemExit(f"{r.label} ramp failed: {r.error}")
    t_fold = (curve.fold_a - A_SYS0) / FAST_RAMP
    c_fold = float(np.interp(t_fold, fast.series.times,
                             fast.series.cumulative_escape))
    ok = ESCAPE_BAND[0] <= c_fold <= ESCAPE_BAND[1]
    print(f"fast ramp escape at the fold: {c_fold:.4f} "
          f"(band {ESCAPE_BAND}) {'ok' if ok else 'OUT OF BAND'}")
    a50 = float(np.interp(0.5, slow.series.cumulative_escape, slow.albedo))
    c_2dec = float(np.interp(2.0, slow.series.times,
                             slow.series.cumulative_escape))
    print(f"slow ramp: albedo at half escape = {a50:.4f}, "
          f"escape after 2 decades = {c_2dec:.4f}")

    # The grid shipped with the slow-ramp config.
    g = SpatialGrid(DOMAIN[0], DOMAIN[1], 239)
    tg = TimeGrid(0.0, 10.0, 800000)
    report = check_admissibility(drift, g, tg, NOISE)
    print("slow-ramp config admissibility:", report.to_dict())

    out = {
        "description": (
            "Monsoon calibration fitted by the implementer: closure "
            "constants from a numerical search against a plausible "
            "present-day operating point (soil moisture 40 mm, land-ocean "
            "contrast ~4.5 K, precipitation ~55 mm/day, humidity ~0.038 at "
            "system albedo 0.47), fold placement above 0.47, and ramp "
            "escape dynamics.  External-provenance data, best-effort "
            "rather than authoritative."
        ),
        "params": {
            **{k: v for k, v in p.to_dict().items() if k != "tau"},
            "tau": {"value": 100.0, "unit": "day"},
        },
        "derived": {
            "fold_albedo": curve.fold_a,
            "fold_q": curve.fold_q,
            "stable_q": q_s,
            "unstable_q": q_u,
            "barrier_over_noise": barrier / NOISE,
            "fast_ramp_escape_at_fold": c_fold,
            "slow_ramp_albedo_at_half_escape": a50,
        },
    }
    target = pathlib.Path(__file__).resolve().parents[1] / "src" / "tipwarn" / "data"
    target.mkdir(parents=True, exist_ok=True)
    path = target / "monsoon_calibration.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print("wrote", path)


if __name__ == "__main__":
    main()
