import numpy as np
import pytest

from activesearch.actions import RegionAction
from activesearch.grid import Measurement


def make_measurement(offset, extent, y, t, agent=0, issue=0.0, finish=1.0):
    return Measurement(
        action=RegionAction(offset=tuple(offset), extent=tuple(extent)),
        y=y, t=t, agent_id=agent, issue_time=issue, finish_time=finish,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
