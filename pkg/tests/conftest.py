from __future__ import annotations

import math
import os
import warnings

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from invquad.design import DesignSpace
from invquad.errors import ClosedFormMismatchWarning
from invquad.model import ModelSpec

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.register_profile("stress", deadline=None, max_examples=600)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

LANDETE = ModelSpec("P1", (0.0002865, 0.0002117, 0.0000301))
LANDETE_SPACE = DesignSpace(1.0, 14.0)
XI_U_POINTS = [1, 2, 3, 4, 5, 6, 10, 14]


def random_model(rng: np.random.Generator, kind: str) -> ModelSpec:
    """Valid model with parameters spread over several decades."""
    if kind == "P1":
        t0, t2 = 10 ** rng.uniform(-4, 2, 2)
        g = rng.uniform(-1.5, 10)
        return ModelSpec("P1", (t0, g * math.sqrt(t0 * t2), t2))
    t0, t1 = 10 ** rng.uniform(-2, 2, 2)
    q = rng.uniform(0.55, 10)
    return ModelSpec("P2", (t0, t1, q * q / t1))


@st.composite
def models(draw, kind=None):
    kind = kind or draw(st.sampled_from(["P1", "P2"]))
    a = draw(st.floats(-3, 2))
    b = draw(st.floats(-3, 2))
    if kind == "P1":
        t0, t2 = 10**a, 10**b
        g = draw(st.floats(-1.5, 10))
        return ModelSpec("P1", (t0, g * math.sqrt(t0 * t2), t2))
    q = draw(st.floats(0.55, 10))
    t1 = 10**b
    return ModelSpec("P2", (10**a, t1, q * q / t1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quiet_mismatch():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClosedFormMismatchWarning)
        yield


def bounded_instance(rng: np.random.Generator, kind_of_criterion: str | None = None):
    """Random (model, bounded space, criterion) with moderate parameters."""
    from invquad.design import Criterion
    from invquad.model import peak_location

    kind = rng.choice(["P1", "P2"])
    if kind == "P1":
        t0, t2 = 10 ** rng.uniform(-1, 1, 2)
        g = rng.uniform(-1, 5)
        m = ModelSpec("P1", (t0, g * math.sqrt(t0 * t2), t2))
    else:
        t0, t1 = 10 ** rng.uniform(-1, 1, 2)
        q = rng.uniform(0.6, 5)
        m = ModelSpec("P2", (t0, t1, q * q / t1))
    p = peak_location(m)
    s = p * rng.uniform(0, 0.8) if rng.random() < 0.8 else 0.0
    t = p * rng.uniform(1.3, 12)
    k = kind_of_criterion or rng.choice(["D", "E", "D1", "ce"])
    if k == "ce":
        above = s == 0 or rng.random() < 0.6
        crit = Criterion.extrapolation(t * rng.uniform(1.1, 3) if above else s * rng.uniform(0.2, 0.9))
    else:
        crit = Criterion(str(k))
    return m, DesignSpace(s, t), crit


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
