import math
import random

import pytest

from uppertail.errors import ValidationError
from uppertail.graphs import PatternGraph, clique, cycle, path, star
from uppertail.patterns import IndependencePolynomial
from uppertail.rates import (
    Regime,
    rate_localized_I,
    rate_poisson,
    rate_regular,
    rate_star_localized_II,
    regime_classify,
    regular_crossover,
    speed,
    star_rho_proxy,
    theta_star_root,
)


def test_theta_root_examples():
    assert theta_star_root(IndependencePolynomial((1, 1)), 0.5) == pytest.approx(0.5, abs=1e-12)
    assert theta_star_root(IndependencePolynomial((1, 2)), 1.0) == pytest.approx(0.5, abs=1e-12)
    assert theta_star_root(IndependencePolynomial((1, 3, 1)), 4.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        theta_star_root(IndependencePolynomial((1, 1)), 0.0)


def test_theta_root_random_residuals_and_monotonicity():
    rng = random.Random(77)
    for _ in range(100):
        coeffs = [1] + [rng.randint(1, 9) for _ in range(rng.randint(1, 5))]
        poly = IndependencePolynomial(tuple(coeffs))
        delta = rng.uniform(0.01, 50)
        root = theta_star_root(poly, delta)
        assert abs(poly.evaluate(root) - (1 + delta)) <= 1e-10 * (1 + delta)
        assert theta_star_root(poly, delta * 1.5) > root


def test_rate_localized_I_examples():
    assert rate_localized_I(star(3), 0.7).rate == pytest.approx(0.7, abs=1e-12)
    assert rate_localized_I(path(4), 1.0).rate == pytest.approx(0.5, abs=1e-12)
    assert rate_localized_I(path(5), 4.0).rate == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        rate_localized_I(clique(3), 1.0)
    with pytest.raises(ValidationError):
        rate_localized_I(PatternGraph(4, [(0, 1), (2, 3)]), 1.0)


def test_star_rate_is_delta():
    for r in (2, 3, 4):
        for delta in (0.1, 0.5, 1.0, 3.0, 7.0):
            assert rate_localized_I(star(r), delta).rate == pytest.approx(delta, abs=1e-10)


def test_rate_regular_examples():
    res = rate_regular(clique(3), 8.0)
    assert res.rate == pytest.approx(2.0, abs=1e-12)
    assert res.details["branch"] == "clique"
    res = rate_regular(clique(3), 0.1)
    assert res.rate == pytest.approx(0.1 / 3, abs=1e-12)
    assert res.details["branch"] == "hub"
    assert rate_regular(cycle(4), 1e-9).rate < 1e-9
    with pytest.raises(ValidationError):
        rate_regular(path(4), 1.0)


def test_regular_crossover_branch_switch():
    delta0 = regular_crossover(clique(3))
    assert delta0 == pytest.approx(27 / 8, rel=1e-6)
    below = rate_regular(clique(3), delta0 * 0.98)
    above = rate_regular(clique(3), delta0 * 1.02)
    assert below.details["branch"] == "hub"
    assert above.details["branch"] == "clique"


def test_rate_poisson():
    assert rate_poisson(0.0) == 0.0
    assert rate_poisson(math.e - 1) == pytest.approx(1.0, abs=1e-12)
    assert rate_poisson(1.0) == pytest.approx(2 * math.log(2) - 1, abs=1e-12)
    # convexity on a grid, and superlinear growth
    grid = [0.1 * k for k in range(1, 60)]
    for a, b in zip(grid, grid[2:]):
        mid = (a + b) / 2
        assert rate_poisson(mid) <= (rate_poisson(a) + rate_poisson(b)) / 2 + 1e-12
    assert rate_poisson(1000) / 1000 > rate_poisson(10) / 10


def test_rate_star_localized_II():
    assert rate_star_localized_II(2, 1.0, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert rate_star_localized_II(2, 1.5, 1.0) == pytest.approx((1 + math.sqrt(0.5)) / 2, abs=1e-12)
    assert rate_star_localized_II(3, 2.0, 1.0) == pytest.approx(2 / 3, abs=1e-12)
    # continuity toward rho = 0 while delta * rho < 1
    for r in (2, 3):
        delta = 0.8
        for k in range(1, 21):
            rho = k / (21 * delta)
            assert rate_star_localized_II(r, delta, rho) == pytest.approx(
                delta ** (1 / r) / r, abs=1e-12
            )
    with pytest.raises(ValidationError):
        rate_star_localized_II(1, 1.0, 0.0)


def test_star_rho_proxy():
    rho_hat, near = star_rho_proxy(1000, 0.03, 2, 2.0)
    assert rho_hat == pytest.approx(1000 * 0.03**2)
    assert near == (abs(2 * rho_hat - round(2 * rho_hat)) < 0.05)


def test_regime_classify_examples():
    n = 10**6
    assert regime_classify(star(2), n, n**-0.4).tag == "LocalizedI"
    assert regime_classify(star(2), n, n**-0.9).tag == "LocalizedII-Star"
    p = (math.log(n) ** 1.2 / n**3) ** (1 / 3)
    assert regime_classify(clique(3), n, p).tag == "Poisson"
    # regular localized window for K3: n p ~ n^0.4 >> log n
    assert regime_classify(clique(3), n, n**-0.6).tag == "Regular-Localized"
    with pytest.raises(ValidationError):
        regime_classify(star(2), n, 1.5)


def test_regime_margins_reported():
    regime = regime_classify(star(2), 10**6, 10**-2)
    assert "localized_I.p_above_n^(-1/Delta)" in regime.margins
    assert all(isinstance(v, float) for v in regime.margins.values())


def test_speed_examples():
    s = speed(Regime("LocalizedI"), star(2), 100, 0.2)
    assert s == pytest.approx(100**2 * 0.2**2 * math.log(5), rel=1e-9)
    s = speed(Regime("Poisson"), clique(3), 100, 0.01)
    assert s == pytest.approx(1 / 6, rel=1e-12)
    s = speed(Regime("LocalizedII-Star"), star(2), 10**4, 1e-3)
    assert s == pytest.approx(10**6 * 1e-3 * math.log(10**4), rel=1e-9)
    with pytest.raises(ValidationError):
        speed(Regime("Unclassified"), star(2), 100, 0.2)


def test_slack_semantics():
    # Mild slack keeps a comfortably classified point in place; past the
    # binding margin a star hands over to the adjacent regime (the two
    # windows partition around p ~ n^(-1/r)), and points outside every
    # window stay Unclassified.
    n = 10**6
    regime = regime_classify(star(2), n, n**-0.4)
    assert regime.tag == "LocalizedI"
    binding = regime.margins["localized_I.p_above_n^(-1/Delta)"]
    assert regime_classify(star(2), n, n**-0.4, slack=math.exp(binding / 2)).tag == "LocalizedI"
    assert (
        regime_classify(star(2), n, n**-0.4, slack=math.exp(binding * 2)).tag
        == "LocalizedII-Star"
    )
    # very sparse p lands in the Poisson window (stars are strictly
    # balanced); below the appearance threshold nothing applies
    assert regime_classify(star(2), n, n**-1.4).tag == "Poisson"
    assert regime_classify(star(2), n, n**-1.6).tag == "Unclassified"


def test_rate_result_speed_method():
    res = rate_localized_I(star(2), 1.0)
    assert res.speed(100, 0.2) == pytest.approx(100**2 * 0.04 * math.log(5), rel=1e-9)
