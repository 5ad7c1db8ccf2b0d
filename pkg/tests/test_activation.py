import math

import numpy as np
import pytest

from modules.activation import (
    LOGISTIC,
    TANH,
    ActivationSpec,
    check_assumptions,
    custom_activation,
    eval_logistic,
    eval_tanh,
    resolve_activation,
)
from modules.errors import ConfigError, DomainError, PreconditionError

GRID = np.linspace(-40.0, 40.0, 8001)


def test_builtin_values():
    assert eval_logistic(0.0) == 0.5
    assert eval_tanh(0.0) == 0.0
    assert eval_logistic(2.0) == pytest.approx(1.0 / (1.0 + math.exp(-2.0)), rel=1e-15)
    np.testing.assert_allclose(eval_tanh(np.array([-1.0, 1.0])), [-math.tanh(1.0), math.tanh(1.0)], rtol=1e-15)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_input_is_rejected(bad):
    with pytest.raises(DomainError):
        eval_logistic(bad)
    with pytest.raises(DomainError):
        eval_tanh(np.array([0.0, bad]))


def test_shifted_evaluation_keeps_tails():
    assert LOGISTIC.shifted(-700.0) > 0.0
    # 1 + tanh(-30) cancels to 0 in direct evaluation
    expected = 2.0 * math.exp(-60.0) / (1.0 + math.exp(-60.0))
    assert TANH.shifted(-30.0) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("spec", [LOGISTIC, TANH], ids=["logistic", "tanh"])
def test_builtin_assumptions_hold(spec):
    report = check_assumptions(spec, GRID)
    assert report.symmetric and report.concave and report.tail_decay and report.monotone
    assert report.passed
    assert report.symmetry_residual <= 1e-12


def test_tanh_is_flagged_for_non_unit_limits():
    assert check_assumptions(TANH, GRID).non_unit_limits
    assert not check_assumptions(LOGISTIC, GRID).non_unit_limits
    assert TANH.lower_limit == -1.0 and TANH.upper_limit == 1.0


def test_check_preconditions():
    with pytest.raises(PreconditionError):
        check_assumptions(LOGISTIC, np.linspace(-1.0, 1.0, 50))
    with pytest.raises(PreconditionError):
        check_assumptions(LOGISTIC, np.linspace(-1.0, 2.0, 200))


def test_custom_logistic_matches_builtin():
    spec = custom_activation("1/(1+exp(-x))")
    x = np.linspace(-20.0, 20.0, 101)
    np.testing.assert_allclose(spec(x), eval_logistic(x), rtol=1e-14, atol=1e-300)
    assert abs(spec.lower_limit) < 1e-20
    assert spec.upper_limit == pytest.approx(1.0, abs=1e-20)
    assert spec.odd_symmetric
    assert spec.tag == "custom:1/(1+exp(-x))"


def test_asymmetric_custom_activation_fails_symmetry():
    spec = custom_activation("1/(1+exp(-x))**2")
    assert not spec.odd_symmetric
    report = check_assumptions(spec, GRID)
    assert not report.symmetric
    assert not report.passed


def test_declared_decay_exponent_is_checked():
    # lower tail 0.5/(1+x), log-log slope between -0.82 and -0.95 on [10, 40]
    expression = "0.5 + 0.5*x/(1+Abs(x))"
    slow = custom_activation(expression, decay_exponent=2.0)
    report = check_assumptions(slow, GRID)
    assert report.symmetric and report.concave
    assert report.tail_slope == pytest.approx(-0.9, abs=0.08)
    assert not report.tail_decay

    assert check_assumptions(custom_activation(expression, decay_exponent=0.5), GRID).tail_decay


def test_slow_tails_get_their_true_limits():
    spec = custom_activation("0.5 + 0.5*x/(1+Abs(x))")
    assert spec.lower_limit == pytest.approx(0.0, abs=1e-9)
    assert spec.upper_limit == pytest.approx(1.0, abs=1e-9)
    assert spec.odd_symmetric
    assert not check_assumptions(spec, GRID).non_unit_limits

    power = custom_activation("0.5 + 0.5*x/sqrt(1+x**2)")
    assert power.lower_limit == pytest.approx(0.0, abs=1e-12)
    assert power.upper_limit == pytest.approx(1.0, abs=1e-12)


def test_constant_map_fails_tail_decay():
    spec = custom_activation("0.5")
    assert spec.lower_limit == spec.upper_limit == 0.5
    report = check_assumptions(spec, GRID)
    assert report.symmetric and report.monotone
    assert not report.tail_decay
    assert not report.passed


def test_exponential_tail_passes_any_declared_exponent():
    spec = ActivationSpec(
        id="logistic",
        eval=LOGISTIC.eval,
        lower_limit=0.0,
        upper_limit=1.0,
        decay_exponent=10.0,
        shifted_eval=LOGISTIC.shifted_eval,
    )
    assert check_assumptions(spec, GRID).tail_decay


@pytest.mark.parametrize(
    "tag, expected", [("logistic", "logistic"), ("TANH", "tanh"), ("custom:tanh(x)", "custom:tanh(x)")]
)
def test_resolve_activation(tag, expected):
    assert resolve_activation(tag).tag == expected


@pytest.mark.parametrize("tag", ["relu", "custom:", "custom:foo(x)", "custom:y", "custom:x.__class__", "logistic:2"])
def test_resolve_activation_rejects(tag):
    with pytest.raises(ConfigError):
        resolve_activation(tag)
