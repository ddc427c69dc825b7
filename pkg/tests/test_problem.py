import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gronwall.problem import (
    Constant,
    ConstantMajorant,
    ContinuousProblem,
    DiscreteProblem,
    DomainError,
    ExponentialDecay,
    ExponentialMajorant,
    PowerLaw,
    PowerLawInstance,
    PowerLawMajorant,
    RationalDecay,
    Separable,
    Tabulated,
    Zero,
    eval_nonlinearity,
    eval_time_fn,
    mu_eval,
    time_fn_integral,
    validate_problem,
)

CANONICAL = PowerLawInstance(c0=1, p=2, c1=1, omega=2, r=3, nu=1, g0=0.5)


@pytest.mark.parametrize(
    "f, t, expected",
    [
        (RationalDecay(3, 1), 0.0, 3.0),
        (RationalDecay(3, 1), 2.0, 1.0),
        (Tabulated(((0, 1), (1, 0.5))), 0.5, 0.75),
        (Constant(2.5), 7.0, 2.5),
        (ExponentialDecay(2, 0), 3.0, 2.0),
    ],
)
def test_eval_time_fn_examples(f, t, expected):
    assert eval_time_fn(f, t) == pytest.approx(expected, rel=1e-15)


def test_tabulated_holds_end_values():
    f = Tabulated(((1, 2), (3, 4)))
    assert f(0.0) == 2.0
    assert f(10.0) == 4.0
    np.testing.assert_allclose(f(np.array([0.0, 2.0, 10.0])), [2.0, 3.0, 4.0])


def test_negative_time_is_a_domain_error():
    with pytest.raises(DomainError):
        eval_time_fn(Constant(1), -0.1)
    with pytest.raises(DomainError):
        mu_eval(PowerLawMajorant(1, 1), -1.0)


@pytest.mark.parametrize(
    "a, g, expected",
    [(Zero(), 3.0, 0.0), (PowerLaw(1, 2), 0.5, 0.25), (PowerLaw(2, 3), 2.0, 16.0)],
)
def test_eval_nonlinearity_examples(a, g, expected):
    assert eval_nonlinearity(a, 1.0, g) == expected


def test_negative_g_is_a_domain_error():
    with pytest.raises(DomainError):
        eval_nonlinearity(PowerLaw(1, 2), 0.0, -1.0)


@pytest.mark.parametrize(
    "m, t, expected",
    [
        (PowerLawMajorant(1, 1), 0.0, (1.0, 1.0)),
        (PowerLawMajorant(2, 2), 1.0, (8.0, 8.0)),
        (ExponentialMajorant(1, 0.5), 0.0, (1.0, 0.5)),
        (ConstantMajorant(3), 4.0, (3.0, 0.0)),
    ],
)
def test_mu_eval_examples(m, t, expected):
    assert mu_eval(m, t) == expected


def test_majorant_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        PowerLawMajorant(0.0, 1.0)
    with pytest.raises(ValueError):
        ExponentialMajorant(-1.0, 1.0)


def test_validate_well_formed_powerlaw_instance():
    assert validate_problem(CANONICAL.problem()).ok


def test_validate_negative_coefficient_fails_nonnegativity():
    p = ContinuousProblem(Constant(1), PowerLaw(-1, 2), Constant(0), 0.1)
    report = validate_problem(p)
    assert not report["alpha_nonnegative"].passed
    assert not report.ok


def test_validate_sqrt_nonlinearity_fails_lipschitz():
    p = ContinuousProblem(Constant(1), PowerLaw(1, 0.5), Constant(0), 0.1)
    report = validate_problem(p)
    assert not report["alpha_lipschitz"].passed
    assert report["alpha_nonnegative"].passed


def test_validate_tabulated_must_increase():
    p = ContinuousProblem(Tabulated(((0, 1), (0, 2))), Zero(), Constant(0), 0.0)
    assert not validate_problem(p)["gamma_table_increasing"].passed


def test_validate_negative_beta():
    p = ContinuousProblem(Constant(1), Zero(), RationalDecay(-1, 2), 0.0)
    assert [c.name for c in validate_problem(p).failures] == ["beta_nonnegative"]


def test_powerlaw_instance_requires_p_above_one():
    with pytest.raises(ValueError, match="p > 1"):
        PowerLawInstance(c0=1, p=1.0, c1=1, omega=2, r=3, nu=1, g0=0.5)


def test_powerlaw_instance_problem_components():
    p = CANONICAL.problem()
    assert p.gamma == RationalDecay(3, 1)
    assert p.alpha == PowerLaw(1, 2)
    assert p.beta == RationalDecay(1, 2)


def test_discrete_problem_broadcasts_and_checks_step_condition():
    d = DiscreteProblem(N=4, h=0.5, gamma=1.0, beta=0.0, alpha=Zero(), g0=0.1)
    assert d.h.tolist() == [0.5] * 4
    with pytest.raises(ValueError, match="h\\[n\\]\\*gamma\\[n\\]"):
        DiscreteProblem(N=4, h=1.0, gamma=1.0, beta=0.0, alpha=Zero(), g0=0.1)
    with pytest.raises(ValueError, match="length"):
        DiscreteProblem(N=4, h=0.5, gamma=[1.0, 1.0], beta=0.0, alpha=Zero(), g0=0.1)
    with pytest.raises(ValueError):
        d.h[0] = 1.0


@pytest.mark.parametrize(
    "f, expected",
    [
        (ExponentialDecay(1, 1), 1.0),
        (ExponentialDecay(3, 2), 1.5),
        (RationalDecay(2, 3), 1.0),
        (RationalDecay(1, 1), math.inf),
        (Constant(0), 0.0),
        (Constant(1), math.inf),
        (Tabulated(((0, 1), (2, 0))), 1.0),
        (Tabulated(((1, 1), (2, 0))), 1.5),
        (Tabulated(((0, 1), (2, 0.5))), math.inf),
    ],
)
def test_time_fn_integral(f, expected):
    assert time_fn_integral(f) == pytest.approx(expected)


# --- properties -------------------------------------------------------------

coef = st.floats(0, 10)
expo = st.floats(0, 5)
times = st.floats(0, 1e3)

time_fns = st.one_of(
    coef.map(Constant),
    st.builds(RationalDecay, coef, expo),
    st.builds(ExponentialDecay, coef, expo),
    st.lists(st.tuples(st.floats(0, 100), coef), min_size=1, max_size=6, unique_by=lambda x: x[0]).map(
        lambda pts: Tabulated(tuple(sorted(pts)))
    ),
)
nonlinearities = st.one_of(
    st.just(Zero()),
    st.builds(PowerLaw, coef, st.floats(1, 4)),
    st.builds(Separable, time_fns, st.floats(1, 4)),
)


@given(time_fns, times)
def test_time_fn_nonnegative_and_finite(f, t):
    v = eval_time_fn(f, t)
    assert math.isfinite(v) and v >= 0


@given(nonlinearities, times, st.floats(0, 10), st.floats(0, 10))
def test_nonlinearity_monotone_in_g(a, t, g1, g2):
    lo, hi = sorted((g1, g2))
    assert eval_nonlinearity(a, t, hi) >= eval_nonlinearity(a, t, lo)


majorants = st.one_of(
    st.builds(PowerLawMajorant, st.floats(0.1, 10), st.floats(0.1, 3)),
    st.builds(ExponentialMajorant, st.floats(0.1, 10), st.one_of(st.floats(-2, -0.1), st.floats(0.1, 2))),
)


@settings(max_examples=200)
@given(majorants, st.floats(1e-3, 20))
def test_mu_derivative_matches_central_differences(m, t):
    step = 1e-5
    fd = (m(t + step) - m(t - step)) / (2 * step)
    _, d = mu_eval(m, t)
    assert abs(fd - d) <= 1e-6 * abs(d)
