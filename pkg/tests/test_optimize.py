import math

import numpy as np
import pytest

from ocb import bounds as B
from ocb import checks
from ocb import optimize as O
from ocb.bounds import ConstraintSpec
from ocb.params import default_delta, default_params_case1
from ocb.errors import DomainError


@pytest.mark.parametrize("a,alpha", [(0.5, 0.1), (3.0, 0.1), (10 ** 1.05, 0.1), (10.0, 0.4), (1e3, 0.3)])
def test_case1_not_worse_than_seed(a, alpha):
    res = O.minimize_upper_case1(a, 1.0, alpha)
    d0, m0 = default_params_case1(a, 1.0, alpha)
    assert res.value <= res.seed_value == pytest.approx(B._upper28(a, 1.0, alpha, d0, m0))
    assert all(p > 0 for p in res.argmin)
    assert res.value >= B.lower_case1(a, 1.0, alpha).nats - 1e-6
    assert res.value == pytest.approx(B.upper_case1_dual(a, 1.0, alpha, *res.argmin).nats, rel=1e-14)


@pytest.mark.parametrize("a", [0.5, 10 ** 0.64, 30.0, 1e6])
def test_case2_not_worse_than_seed(a):
    res = O.minimize_upper_case2(a, 1.0)
    assert res.value <= B._upper40(a, 1.0, default_delta(a, 1.0))
    assert res.argmin[0] > 0
    assert res.value >= B.lower_case2(a, 1.0).nats - 1e-6


@pytest.mark.parametrize("e", [1e-4, 0.1, 0.9, 2.0, 1e3])
def test_case3_both_branches(e):
    both = O.minimize_upper_case3_both(e, 1.0)
    d47, b47 = both[47].argmin
    d48, b48 = both[48].argmin
    assert d47 <= -math.exp(-0.5) and b47 > 0
    assert d48 >= 0 and b48 > 0
    for r in both.values():
        assert r.value <= r.seed_value
        assert r.value >= B.lower_case3(e, 1.0).nats - 1e-6
    best = O.minimize_upper_case3(e, 1.0)
    assert best.value == min(r.value for r in both.values())


def test_case1_line_search_is_not_stuck():
    # a 1-d scan along delta at the returned mu cannot beat the optimum by more than the tolerance
    a, alpha = 10 ** 1.05, 0.1
    res = O.minimize_upper_case1(a, 1.0, alpha)
    d, m = res.argmin
    scan = [B._upper28(a, 1.0, alpha, d * f, m) for f in np.geomspace(0.5, 2.0, 201)]
    assert min(scan) >= res.value - 1e-8


def test_deterministic():
    r1 = O.minimize_upper_case1(5.0, 1.0, 0.2)
    r2 = O.minimize_upper_case1(5.0, 1.0, 0.2)
    assert r1 == r2
    e1 = O.envelope(ConstraintSpec(1.0, 2.0))
    e2 = O.envelope(ConstraintSpec(1.0, 2.0))
    assert e1 == e2


def test_candidates_stay_in_domain(monkeypatch):
    seen = {"28": [], "47": [], "48": []}
    orig28, orig47, orig48 = B._upper28, B._upper47, B._upper48

    def spy28(a, s, al, d, m):
        seen["28"].append((d, m))
        return orig28(a, s, al, d, m)

    def spy47(e, s, d, b):
        seen["47"].append((d, b))
        return orig47(e, s, d, b)

    def spy48(e, s, d, b):
        seen["48"].append((d, b))
        return orig48(e, s, d, b)

    monkeypatch.setattr(B, "_upper28", spy28)
    monkeypatch.setattr(B, "_upper47", spy47)
    monkeypatch.setattr(B, "_upper48", spy48)
    O.minimize_upper_case1(3.0, 1.0, 0.2)
    O.minimize_upper_case3_both(0.3, 1.0)
    assert seen["28"] and all(d > 0 and m > 0 for d, m in seen["28"])
    assert seen["47"] and all(d <= -math.exp(-0.5) and b > 0 for d, b in seen["47"])
    assert seen["48"] and all(d >= 0 and b > 0 for d, b in seen["48"])


def test_envelope_contents():
    env = O.envelope(ConstraintSpec(1.0, 1.0, 10.0))
    assert set(env.contributors) == {26, 27, 28}
    assert env.lower_formula == 26 and env.upper_formula in (27, 28)
    assert env.gap == pytest.approx(env.upper - env.lower)
    env2 = O.envelope(ConstraintSpec(1.0, 5.0, 10.0))
    assert set(env2.contributors) == {38, 39, 40}
    env3 = O.envelope(ConstraintSpec(1.0, 1.0))
    assert set(env3.contributors) == {46, 47, 48}


def test_envelope_at_zero():
    assert O.envelope(ConstraintSpec(1.0, 0.0, 0.0)).gap == 0.0
    assert O.envelope(ConstraintSpec(1.0, 0.0, 1.0)).gap == 0.0
    assert O.envelope(ConstraintSpec(1.0, 0.0)).gap == 0.0


@pytest.mark.parametrize("db", np.arange(-20.0, 61.0, 10.0))
@pytest.mark.parametrize("case,alpha", [("I", 0.05), ("I", 0.3), ("II", None), ("III", None)])
def test_envelope_gap_nonnegative(db, case, alpha):
    env = O.envelope(checks._spec(case, 10 ** (db / 10), alpha))
    assert env.gap >= -1e-9
    assert env.lower >= 0


def test_high_snr_gaps_close():
    a = 1e6
    env2 = O.envelope(ConstraintSpec(1.0, a, a))
    assert env2.gap < 0.01
    env3 = O.envelope(ConstraintSpec(1.0, a))
    assert env3.gap < 0.01


def test_optimizer_improves_on_gauss_bound_at_high_snr():
    env = O.envelope(ConstraintSpec(1.0, 100.0, 1000.0))
    assert env.upper_formula == 28
