import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog, minimize

from opnorm import (
    DomainError,
    EigenSystem,
    QcqpInstance,
    ResourceError,
    SamplingOperator,
    dual_oracle,
    grid_oracle,
    q_set_boundary,
    two_by_two_F,
)

POLY2 = EigenSystem.polynomial(1.0, 2.0)


def diagonal_lp(m, s, eps2):
    # with diagonal S the problem is an LP in the squared coordinates
    res = linprog(-np.asarray(m), A_ub=np.vstack([np.ones(len(m)), s]), b_ub=[1.0, eps2], bounds=(0, None), method="highs")
    return -res.fun


def slsqp_value(inst, rng, starts=20):
    cons = [
        {"type": "ineq", "fun": lambda a: 1.0 - a @ a},
        {"type": "ineq", "fun": lambda a: inst.eps2 - a @ inst.S @ a},
    ]
    best = 0.0
    for _ in range(starts):
        a0 = rng.normal(size=inst.N) * 0.3
        r = minimize(lambda a: -(a @ (inst.m * a)), a0, constraints=cons, method="SLSQP", options={"ftol": 1e-12, "maxiter": 500})
        a = r.x
        if a @ a <= 1 + 1e-9 and a @ inst.S @ a <= inst.eps2 + 1e-9:
            best = max(best, float(a @ (inst.m * a)))
    return best


def test_instance_validation():
    with pytest.raises(DomainError):
        QcqpInstance([1.0, 2.0], np.eye(2), 0.1)
    with pytest.raises(DomainError):
        QcqpInstance([1.0], np.eye(2), 0.1)
    with pytest.raises(DomainError):
        QcqpInstance([1.0, 0.5], [[1.0, 2.0], [2.0, 1.0]], 0.1)
    with pytest.raises(DomainError):
        QcqpInstance([1.0], [[1.0]], -0.1)


def test_dual_examples():
    m = np.array([1.0, 0.25])
    assert dual_oracle(QcqpInstance(m, np.diag(m), 0.1)) == pytest.approx(0.1, abs=1e-9)
    assert dual_oracle(QcqpInstance(m, np.zeros((2, 2)), 0.1)) == pytest.approx(1.0)
    inst = QcqpInstance.from_operator(SamplingOperator.fourier_truncation(2), POLY2, 3, math.sqrt(0.1))
    assert dual_oracle(inst) == pytest.approx(0.2, abs=1e-9)


def test_grid_examples():
    m = np.array([1.0, 0.25])
    assert grid_oracle(QcqpInstance(m, np.diag(m), 0.1)) >= 0.0999
    assert grid_oracle(QcqpInstance(m, np.eye(2), 0.0)) == 0.0
    assert grid_oracle(QcqpInstance([1.0], [[1.0]], 0.5)) == pytest.approx(0.5)
    with pytest.raises(ResourceError):
        grid_oracle(QcqpInstance(np.ones(5), np.eye(5), 0.1))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), N=st.integers(1, 6), e2=st.floats(0.0, 2.0))
def test_dual_matches_lp_on_diagonal_instances(seed, N, e2):
    r = np.random.default_rng(seed)
    m = np.sort(r.random(N))[::-1]
    s = r.random(N) * 2
    assert dual_oracle(QcqpInstance(m, np.diag(s), e2)) == pytest.approx(diagonal_lp(m, s, e2), abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 100_000), N=st.integers(2, 5))
def test_dual_dominates_local_primal_solutions(seed, N):
    r = np.random.default_rng(seed)
    m = np.sort(r.random(N))[::-1]
    B = r.normal(size=(N, N))
    S = B @ B.T / N
    inst = QcqpInstance(m, S, float(r.random() * 0.5))
    primal = slsqp_value(inst, r)
    dual = dual_oracle(inst)
    assert primal <= dual + 1e-7
    # strong duality holds for two quadratic forms, so the gap closes too
    assert dual - primal <= 1e-4


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_grid_sandwich_n4(seed):
    r = np.random.default_rng(seed)
    m = np.sort(r.random(4))[::-1]
    B = r.normal(size=(4, 4))
    inst = QcqpInstance(m, B @ B.T / 4, float(r.random() * 0.5))
    g = grid_oracle(inst, resolution=60)
    d = dual_oracle(inst)
    assert g <= d + 1e-9
    assert d - g <= 1e-2


def test_two_by_two_examples():
    assert two_by_two_F(4, 1, 2, 0.5, 1) == pytest.approx(2.0)
    assert two_by_two_F(4, 1, 2, 0.5, 0) == 0.0
    assert two_by_two_F(1, 0.2, 1, 0.5, 0.3) == 0.3
    assert two_by_two_F(3, 1, 0, 0, 0.5) == 3.0
    with pytest.raises(DomainError):
        two_by_two_F(-1, 1, 1, 1, 1)


def disc_grid(u2, v2, a2, d2, eps2, k=401):
    # the maximum is on r^2 + s^2 <= 1, so search over (r^2, s^2) in the triangle
    g = np.linspace(0, 1, k)
    R, S = np.meshgrid(g, g, indexing="ij")
    ok = (R + S <= 1) & (a2 * R + d2 * S <= eps2)
    return float(np.max(np.where(ok, u2 * R + v2 * S, -np.inf)))


@settings(max_examples=60, deadline=None)
@given(
    u2=st.floats(0.01, 4),
    v2=st.floats(0.01, 4),
    a2=st.floats(0.0, 4),
    d2=st.floats(0.0, 4),
    eps2=st.floats(0.0, 4),
)
def test_two_by_two_matches_grid_and_dual(u2, v2, a2, d2, eps2):
    F = two_by_two_F(u2, v2, a2, d2, eps2)
    g = disc_grid(u2, v2, a2, d2, eps2)
    assert g <= F + 1e-9
    assert F - g <= 2e-2 * max(u2, v2)
    # swapping so that the objective diagonal is sorted gives a QCQP instance
    if u2 >= v2:
        m, S = [u2, v2], np.diag([a2, d2])
    else:
        m, S = [v2, u2], np.diag([d2, a2])
    assert dual_oracle(QcqpInstance(m, S, eps2)) == pytest.approx(F, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(u2=st.floats(0.1, 4), ratio=st.floats(0.01, 1), d_extra=st.floats(0, 2), t=st.floats(0, 1))
def test_two_by_two_case_ii_is_identity(u2, ratio, d_extra, t):
    v2 = u2 * ratio
    eps2 = t * u2
    assert two_by_two_F(u2, v2, u2, v2 + d_extra, eps2) == eps2


def test_q_set_boundary_fourier_vertices():
    n, N = 2, 4
    inst = QcqpInstance.from_operator(SamplingOperator.fourier_truncation(n), POLY2, N, 0.1)
    pts = np.array([(q2, qp) for _, q2, qp in q_set_boundary(inst, samples=720)])
    assert np.min(np.hypot(pts[:, 0] - 1.0, pts[:, 1] - 1.0)) < 1e-9
    assert np.min(np.hypot(pts[:, 0] - 1 / 9, pts[:, 1])) < 1e-9
    # the S = M case collapses onto the diagonal
    inst = QcqpInstance([1.0, 0.25], np.diag([1.0, 0.25]), 0.1)
    rows = q_set_boundary(inst, samples=36)
    assert all(abs(q2 - qp) < 1e-12 for _, q2, qp in rows)
    single = q_set_boundary(QcqpInstance([0.7], [[0.3]], 0.1), samples=8)
    assert {(round(q2, 12), round(qp, 12)) for _, q2, qp in single} == {(0.7, 0.3)}
