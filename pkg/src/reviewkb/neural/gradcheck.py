"""Finite-difference verification of analytic gradients.

``loss_and_grad`` must zero the parameter gradients, run a full forward and
backward pass from the current parameter values, and return the scalar loss.
Central differences are taken at a seeded subsample of coordinates per block;
the reported number is the worst relative error with an absolute floor, so
near-zero gradient pairs do not blow up the ratio.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import NumericalError
from .layers import Param


def grad_check(
    loss_and_grad: Callable[[], float],
    params: Sequence[Param],
    epsilon: float = 1e-4,
    max_coords: int = 32,
    seed: int = 0,
    tolerance: float = 1e-3,
    absolute_floor: float = 1e-5,
) -> dict[str, float]:
    """Max relative error between analytic and numeric gradients per block."""
    loss = float(loss_and_grad())
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss} in grad_check")
    analytic = {p.name: p.grad.copy() for p in params}

    rng = np.random.default_rng(seed)
    floor = absolute_floor / tolerance
    report: dict[str, float] = {}
    for p in params:
        flat = p.value.reshape(-1)
        n_coords = min(flat.size, max_coords)
        if n_coords == 0:
            report[p.name] = 0.0
            continue
        coords = rng.choice(flat.size, size=n_coords, replace=False)
        worst = 0.0
        ana = analytic[p.name].reshape(-1)
        for i in coords:
            original = flat[i]
            flat[i] = original + epsilon
            plus = float(loss_and_grad())
            flat[i] = original - epsilon
            minus = float(loss_and_grad())
            flat[i] = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericalError(f"non-finite loss while perturbing {p.name}[{i}]")
            numeric = (plus - minus) / (2.0 * epsilon)
            err = abs(ana[i] - numeric) / max(abs(ana[i]), abs(numeric), floor)
            worst = max(worst, err)
        report[p.name] = worst
    # Restore analytic grads so callers can inspect them after the check.
    for p in params:
        p.grad[...] = analytic[p.name]
    return report


def check_passes(report: dict[str, float], tolerance: float = 1e-3) -> bool:
    return all(err < tolerance for err in report.values())
