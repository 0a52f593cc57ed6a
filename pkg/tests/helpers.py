"""Shared builders for synthetic pools and input files."""

import csv
import math

import numpy as np

from bestofn import ResultPool


def bivariate_normal_pool(
    m,
    mu_val=0.0,
    mu_test=0.0,
    sigma_val=1.0,
    sigma_test=1.0,
    rho=0.0,
    seed=0,
    direction="maximize",
):
    """Pool of m draws from a bivariate normal with the given correlation."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((m, 2))
    vals = mu_val + sigma_val * z[:, 0]
    tests = mu_test + sigma_test * (rho * z[:, 0] + math.sqrt(1.0 - rho**2) * z[:, 1])
    return ResultPool.from_arrays(vals, tests, direction)


def random_tied_records(rng, m_max=6):
    """Random (validation, test) records, with ties likely on validation."""
    m = int(rng.integers(1, m_max + 1))
    if rng.random() < 0.5:
        # draw validations from a tiny integer grid so ties are common
        vals = rng.integers(0, 3, size=m).astype(float)
    else:
        vals = rng.normal(size=m).round(2)
    tests = rng.normal(loc=10.0, scale=5.0, size=m).round(3)
    return list(zip(vals.tolist(), tests.tolist()))


def write_pool_csv(path, rows, header=("validation", "test")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return str(path)
