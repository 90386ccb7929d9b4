import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from gcsynth.augment import MultiplierPoint  # noqa: E402
from gcsynth.config import example_config_path, load_config  # noqa: E402
from gcsynth.model import MONOTONE_N, NonlinearChannel, PlantModel, UncertaintyChannel  # noqa: E402

REF_POINT = MultiplierPoint((0.15,), ((1.0, 0.1, 0.12),))


def compressor_model(N=MONOTONE_N, R=None, G=None, x0=(1.0, 0.0)):
    """Compressor surge plant with explicit nonlinearity matrix and weights."""
    nl = NonlinearChannel.from_poly(
        [0.0, 1.5, 1.5, 0.5], B1bar=np.array([[-1.0], [0.0]]), C1bar=np.array([[1.0, 0.0]]), N=np.array(N, float)
    )
    unc = UncertaintyChannel(np.array([[0.0], [1.0]]), np.array([[0.1, 0.0]]))
    return PlantModel(
        np.array([[1.5, -1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]), (nl,), (unc,),
        None if R is None else np.asarray(R, float), None if G is None else np.asarray(G, float),
        np.array(x0, float),
    )


@pytest.fixture(scope="session")
def shipped():
    return load_config(example_config_path("compressor"))


@pytest.fixture(scope="session")
def shipped_unit():
    return load_config(example_config_path("compressor_unit_weights"))


@pytest.fixture(scope="session")
def reference_point():
    return REF_POINT


@pytest.fixture(scope="session")
def reference_result(shipped):
    from gcsynth.synthesis import evaluate_point

    return evaluate_point(shipped.plant, REF_POINT)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
