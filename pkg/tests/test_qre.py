import numpy as np
import pytest

from empeq import corpus
from empeq.game import Game, MixedProfile
from empeq.monotone import is_payoff_monotone
from empeq.qre import (
    LogisticQRF,
    QreConvergenceError,
    default_lambda_schedule,
    logistic_profile,
    logistic_qrf,
    perturbed_monotone_point,
    qre_fixed_point,
    qrf_regularity_audit,
    trace_logit_path,
)

from conftest import corpus_games, random_game


def test_logistic_lambda_zero_uniform():
    q = logistic_qrf(0.0)
    out = q.evaluate(np.array([3.0, -1.0, 17.0]))
    assert np.allclose(out, 1 / 3)


def test_logistic_lambda_one_two_actions():
    q = logistic_qrf(1.0)
    out = q.evaluate(np.array([1.0, 0.0]))
    e = np.exp(1.0)
    assert out[0] == pytest.approx(e / (e + 1), abs=1e-12)
    assert out[1] == pytest.approx(1 / (e + 1), abs=1e-12)
    assert out[0] == pytest.approx(0.73106, abs=1e-5)
    assert out[1] == pytest.approx(0.26894, abs=1e-5)


def test_logistic_shift_invariance():
    q = logistic_qrf(2.5)
    x = np.array([0.4, -1.2, 3.0])
    assert np.allclose(q.evaluate(x), q.evaluate(x + 17.3), atol=1e-12)


def test_logistic_rejects_bad_lambda():
    with pytest.raises(ValueError):
        logistic_qrf(-1.0)
    with pytest.raises(ValueError):
        LogisticQRF(np.inf)


def test_fixed_point_lambda_zero_uniform(gamma2c22):
    pt = qre_fixed_point(gamma2c22, logistic_profile(gamma2c22, 0.0))
    assert np.allclose(pt.profile.stacked(), 1 / 3, atol=1e-12)
    assert pt.residual <= 1e-10


def test_fixed_point_gamma1_tilts_to_top(gamma1):
    pt = qre_fixed_point(gamma1, logistic_profile(gamma1, 10.0))
    assert pt.profile.is_interior
    assert pt.profile.vectors[0][0] > 0.5


def test_fixed_point_constant_game_uniform():
    g = Game(
        ["P1", "P2"],
        {"P1": ["x", "y", "z"], "P2": ["u", "v"]},
        np.full((3, 2, 2), 2.0),
    )
    for qrfs in (logistic_profile(g, 5.0), logistic_profile(g, 0.7)):
        pt = qre_fixed_point(g, qrfs)
        assert np.allclose(pt.profile.vectors[0], 1 / 3, atol=1e-10)
        assert np.allclose(pt.profile.vectors[1], 1 / 2, atol=1e-10)


def test_fixed_point_requires_one_qrf_per_player(gamma1):
    with pytest.raises(ValueError):
        qre_fixed_point(gamma1, [logistic_qrf(1.0)])


def test_qre_points_payoff_monotone():
    for g in corpus_games():
        for lam in (0.5, 1, 2, 5, 10):
            pt = qre_fixed_point(g, logistic_profile(g, lam))
            assert pt.residual < 1e-10
            assert is_payoff_monotone(g, pt.profile).satisfied


def test_trace_gamma1_reaches_top_avoids_bottom(gamma1):
    path = trace_logit_path(gamma1)
    top = MixedProfile.pure(gamma1, {"P1": "a1", "P2": "b1"})
    bottom = MixedProfile.pure(gamma1, {"P1": "a2", "P2": "b2"})
    assert path.terminal.distance(top) <= 1e-3
    assert path.nash_distance <= 1e-3
    assert min(pt.profile.distance(bottom) for pt in path.points) > 0.25


def test_trace_gamma2c_small_costs():
    g = corpus.gamma2c(0.5, 0.5)
    path = trace_logit_path(g)
    top = MixedProfile.pure(g, {"P1": "a1", "P2": "b1"})
    assert path.terminal.distance(top) <= 1e-3


def test_trace_schedule_zero_only(gamma1):
    path = trace_logit_path(gamma1, [0.0])
    assert len(path.points) == 1
    assert np.allclose(path.points[0].profile.stacked(), 0.5)


def test_trace_rejects_bad_schedule(gamma1):
    with pytest.raises(ValueError):
        trace_logit_path(gamma1, [0.1, 1.0])
    with pytest.raises(ValueError):
        trace_logit_path(gamma1, [0.0, 1.0, 0.5])


def test_trace_endpoints_near_nash_on_corpus():
    for g in corpus_games():
        path = trace_logit_path(g)
        assert path.nash_distance is not None
        assert path.nash_distance <= 1e-3


def test_perturbed_uniform_fixed_on_flat_game():
    g = Game(
        ["P1", "P2"],
        {"P1": ["x", "y"], "P2": ["u", "v"]},
        np.full((2, 2, 2), 1.0),
    )
    mu = MixedProfile.uniform(g)
    pt = perturbed_monotone_point(g, mu, zeta=0.3)
    assert np.allclose(pt.profile.stacked(), 0.5, atol=1e-10)
    assert pt.distance <= 1e-10


def test_perturbed_gamma1_example(gamma1):
    mu = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.75, "a2": 0.25}, "P2": {"b1": 0.75, "b2": 0.25}}
    )
    pt = perturbed_monotone_point(gamma1, mu, zeta=0.01, lam=1.0)
    assert pt.profile.is_interior
    assert pt.verdict.satisfied
    assert pt.distance <= 0.02


def test_perturbed_distance_shrinks_with_zeta(gamma1):
    mu = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.6, "a2": 0.4}, "P2": {"b1": 0.8, "b2": 0.2}}
    )
    bounds = {0.1: 0.2, 0.01: 0.02, 0.001: 0.002}
    last = np.inf
    for zeta, cap in bounds.items():
        pt = perturbed_monotone_point(gamma1, mu, zeta=zeta)
        assert pt.distance <= cap
        assert pt.distance <= last + 1e-12
        last = pt.distance


def test_perturbed_rejects_non_monotone_mu(gamma1):
    mu = MixedProfile.pure(gamma1, {"P1": "a2", "P2": "b2"})
    with pytest.raises(ValueError):
        perturbed_monotone_point(gamma1, mu, zeta=0.1)


def test_audit_logistic_clean():
    rep = qrf_regularity_audit(logistic_qrf(2.0), 3, sample_count=150, seed=1)
    assert rep.passed
    assert all(rep.axioms.values())


def test_audit_lambda_zero_not_responsive():
    rep = qrf_regularity_audit(logistic_qrf(0.0), 3, sample_count=50, seed=1)
    assert not rep.axioms["responsiveness"]
    assert any(kind == "responsiveness" for kind, _ in rep.counterexamples)


def test_newton_fallback_high_lambda():
    # a high-precision logit point on an asymmetric game
    rng = np.random.default_rng(4)
    g = random_game(rng, (3, 3))
    pt = qre_fixed_point(g, logistic_profile(g, 40.0))
    assert pt.residual < 1e-10
