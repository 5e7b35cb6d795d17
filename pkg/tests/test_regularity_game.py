import numpy as np

from heiswalk import dpp, stochastic as st
from heiswalk.averaging import QuadratureSpec
from heiswalk.domains import make_ball_domain


def test_regularity_probe_game_on_ball():
    # exterior-corkscrew boundary point of the gauge ball: the minimizing
    # player keeps the stopped position near the start corner
    dom = make_ball_domain([0, 0, 0], 1.0)
    eps, delta = 0.3, 0.8
    gcfg = st.GameConfig(eps=eps, p=3.0, base_seed=8,
                         quad=QuadratureSpec("tensor", 512, 0),
                         n_candidates=64, max_steps=100_000)
    res = st.regularity_probe(
        dom, [1.0, 0.0, 0.0], eta=0.2, delta=delta, eps=eps, n_traj=600,
        kind="game", base_seed=8, p=3.0, cfg_game=gcfg)
    assert res.delta_hat == delta / 8.0
    assert res.estimate.mean >= 1.0 - 0.2
    assert res.estimate.truncated_count == 0
