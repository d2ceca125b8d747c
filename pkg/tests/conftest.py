import dataclasses
import json
from fractions import Fraction as F

import pytest

from unpierceable.cli import build
from unpierceable.crossing import LevelGeometry
from unpierceable.plumbing import initial_plumbing
from unpierceable.refine import Layout, refine
from unpierceable.rook import generate_good_placement
from unpierceable.schedule import derive_level, relaxed


def small_level(eps=F(1, 2), delta=F(1, 5), v=9, t=109, eta_div=100):
    """Level-0 data with a slab count small enough for fast refinement.

    ``t`` must stay 1 mod 2v and keep the gap below a rook column.
    """
    P = initial_plumbing(eps)
    params = derive_level(P, delta, v, relaxed(F(1, 4)))
    params = dataclasses.replace(params, t=t, eta=P.width / (t * eta_div),
                                 k=params.rect_length * t / (2 * v * params.w))
    return P, params, generate_good_placement(v, 0)


@pytest.fixture(scope="session")
def small():
    P, params, placement = small_level()
    Q, report = refine(P, params, placement)
    L = Layout(P, params, placement)
    return dict(P=P, params=params, placement=placement, Q=Q, report=report, L=L,
                g0=LevelGeometry(P), g1=LevelGeometry(Q))


SMALL_CONFIG = {
    "epsilon0": {"n": "1", "d": "2"},
    "mode": {"c": {"n": "1", "d": "4"}},
    "levels": [{"delta": {"n": "1", "d": "5"}, "v": 9, "seed": 0}],
}


@pytest.fixture(scope="session")
def small_build(tmp_path_factory):
    out = tmp_path_factory.mktemp("build")
    build(SMALL_CONFIG, out, log=lambda *_: None)
    (out / "config.json").write_text(json.dumps(SMALL_CONFIG))
    return out


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import lines

    out = lines()
    if out:
        terminalreporter.section("acceptance criteria")
        for line in out:
            terminalreporter.write_line(line)
