"""Fit the constants of the "up to a constant" bounds and freeze them.

Each constant is the largest observed ratio on its calibration grid times
``MARGIN``.  The tests assert that the bounds hold with the frozen constants
and that the observed maxima stay where they were when frozen.

Usage::

    python3 scripts/calibrate.py [--out tests/fixtures/calibration.json]
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from ginibre_lab import montecarlo
from ginibre_lab.complex_onepoint import (
    rescaled_bound_lhs,
    rescaled_bound_rhs,
    rescaled_energy,
    rescaled_onepoint,
    trace_resolvent_complex,
)
from ginibre_lab.mde_core import ShiftParams
from ginibre_lab.real_onepoint import real_tail_bound_rhs, trace_resolvent_real

MARGIN = 1.25

RESCALED_LAMBDAS = [float(x) for x in np.geomspace(1e-4, 1e-1, 13)]
RESCALED_DELTAS = [0.0, 1.0, 4.0]

REAL_NS = [50, 100, 200]
REAL_ETA_LEVELS = [0.0, 2.0, 8.0]  # N eta^2 on |z| = 1
REAL_EXTRA_Z = [0.9, 1.05]
REAL_ENERGIES = [float(x) for x in np.geomspace(1e-12, 1.0, 13)]

ADDITIVE_N = 10_000
ADDITIVE_POINTS = [(0.5, 2.0), (0.2, 2.0), (0.5, 0.0), (1.0, 1.0)]

COROLLARY_N = 100
COROLLARY_SAMPLES = 2000
COROLLARY_SEED = 20240917
COROLLARY_X = [float(x) for x in np.geomspace(1e-3, 10.0, 13)]
COROLLARY_CASES = [("complex", 1.0), ("real", 1.0), ("real", 1j)]


def unit_z(N: int, level: float) -> complex:
    eta = math.sqrt(level / N)
    return complex(math.sqrt(1 - eta * eta), eta)


def real_grid() -> list[tuple[int, complex]]:
    pts = [(N, unit_z(N, lv)) for N in REAL_NS for lv in REAL_ETA_LEVELS]
    pts += [(N, complex(z)) for N in REAL_NS for z in REAL_EXTRA_Z]
    return pts


def rescaled_ratios() -> list[float]:
    return [
        rescaled_bound_lhs(lam, d) / rescaled_bound_rhs(lam, d)
        for d in RESCALED_DELTAS
        for lam in RESCALED_LAMBDAS
    ]


def real_ratios() -> list[float]:
    out = []
    for N, z in real_grid():
        p = ShiftParams(N, z)
        for E in REAL_ENERGIES:
            out.append(abs(trace_resolvent_real(p, E).value) / real_tail_bound_rhs(p, E))
    return out


def additive_ratios() -> list[float]:
    out = []
    N = ADDITIVE_N
    for lam, d in ADDITIVE_POINTS:
        E = rescaled_energy(lam, d, N)
        p = ShiftParams.from_delta(N, d * N**-0.5)
        a = rescaled_onepoint(lam, d, N).value
        b = trace_resolvent_complex(p, E).value
        out.append(abs(a - b) / (N * max(1.0, d) * (1 + abs(math.log(lam)))))
    return out


def corollary_ratios(seed: int = COROLLARY_SEED) -> list[float]:
    out = []
    for symmetry, z in COROLLARY_CASES:
        spec = montecarlo.EnsembleSpec(COROLLARY_N, symmetry, z, COROLLARY_SAMPLES, seed)
        x = montecarlo.rescaled_lambda1(montecarlo.sample_lambda1(spec), spec.params)
        cdf = montecarlo.EmpiricalCdf(x)
        grid = np.array(COROLLARY_X)
        bound = montecarlo.corollary_bound(grid, spec.params, symmetry)
        out.extend((cdf(grid) / bound).tolist())
    return out


def frozen(ratios: list[float], **grid) -> dict:
    peak = max(ratios)
    return {"max_ratio": peak, "margin": MARGIN, "constant": MARGIN * peak, "grid": grid}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests/fixtures/calibration.json")
    args = ap.parse_args()
    data = {
        "rescaled_bound": frozen(rescaled_ratios(), lambdas=RESCALED_LAMBDAS, delta_tilde=RESCALED_DELTAS),
        "real_bound": frozen(
            real_ratios(),
            N=REAL_NS,
            N_eta2=REAL_ETA_LEVELS,
            extra_z=REAL_EXTRA_Z,
            energies=REAL_ENERGIES,
        ),
        "additive_error": frozen(additive_ratios(), N=ADDITIVE_N, points=ADDITIVE_POINTS),
        "corollary": frozen(
            corollary_ratios(),
            N=COROLLARY_N,
            samples=COROLLARY_SAMPLES,
            seed=COROLLARY_SEED,
            x=COROLLARY_X,
            cases=[[s, str(z)] for s, z in COROLLARY_CASES],
        ),
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(data, indent=2) + "\n")
    for k, v in data.items():
        print(f"{k}: max ratio {v['max_ratio']:.6g}, constant {v['constant']:.6g}")


if __name__ == "__main__":
    main()
