"""Shared fixtures and small builders used across the test modules."""
from __future__ import annotations

import pathlib

import numpy as np
import pytest

from tvcm import LongitudinalDataset, SubjectRecord
from tvcm.basis import build_design

REPO_ROOT = pathlib.Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def demo_csv() -> pathlib.Path:
    path = REPO_ROOT / "data" / "demo_longitudinal.csv"
    if not path.exists():
        pytest.skip("bundled demo CSV missing; run scripts/make_demo_data.py")
    return path


def single_subject(times, responses, subject_id="s0") -> LongitudinalDataset:
    """One-subject dataset with no covariates beyond the intercept."""
    times = np.asarray(times, dtype=float)
    rec = SubjectRecord(subject_id, times, np.asarray(responses, dtype=float),
                        np.empty((times.size, 0)))
    return LongitudinalDataset((rec,))


def exact_response_dataset(base: LongitudinalDataset, specs, alpha_star):
    """Copy of base whose responses equal the model curve exactly.

    Useful for noiseless recovery checks: y rows are the design rows times
    alpha_star, so the weighted fit must return alpha_star up to roundoff.
    """
    bundle = build_design(base, specs)
    subjects = []
    row = 0
    for rec in base.subjects:
        k = rec.n_obs
        fitted = bundle.Z[row:row + k] @ np.asarray(alpha_star, dtype=float)
        subjects.append(SubjectRecord(rec.subject_id, rec.times, fitted,
                                      rec.covariates))
        row += k
    return LongitudinalDataset(tuple(subjects), base.time_domain)
