"""Shared test helpers."""
import numpy as np

from rotns.initial_data import random_solenoidal


def random_field(grid, seed, kmax=None, exponent=1.0):
    if kmax is None:
        kmax = grid.scale * np.floor(grid.dealias_cutoff) * np.sqrt(3)
    return random_solenoidal(grid, kmax, exponent, seed)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE: dict = {}


def record(criterion: str, title: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = f"criterion {criterion:<3} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    print(ACCEPTANCE[criterion])
    return passed
