import math

import pytest

from maxprod._mp import MP, mpf
from maxprod.construction import delta_bound
from maxprod.intervals import (Interval, covering_check, density_table, interval, intervals_for,
                               lower_density_estimate)


def test_endpoint_formulas(pow5):
    _, c = pow5
    iv = interval(c, 0, 1, 0.09)
    L = math.log(1024)
    assert float(iv.lo_log) == pytest.approx(-L * (0.91 / 64 + 0.09 / 65536), rel=1e-15)
    assert float(iv.hi_log) == pytest.approx(-L * (0.09 * (64 / 2048) / 64 + (1 - 0.09 * 64 / 2048) / 65536),
                                             rel=1e-15)


def test_nested_between_circles(pow5):
    _, c = pow5
    for j in (0, 1):
        for iv in intervals_for(c, j, delta_bound(c)):
            i = iv.index
            assert c.zero_log_radius(i) < iv.lo_log < iv.hi_log < c.zero_log_radius(i + 2)


def test_interval_args(pow5):
    _, c = pow5
    with pytest.raises(ValueError):
        interval(c, 2, 1, 0.05)
    with pytest.raises(ValueError):
        interval(c, 0, 1, 1.5)
    with pytest.raises(IndexError):
        interval(c, 0, 0, 0.05)
    with pytest.raises(IndexError):
        interval(c, 0, 20, 0.05)


def test_covering_at_bound(pow5):
    _, c = pow5
    rep = covering_check(c, delta_bound(c))
    assert rep.passed and rep.disjoint
    assert all(r["margin1"] >= 0 and r["margin2"] >= 0 for r in rep.rows)


def test_covering_adversarial(pow5):
    _, c = pow5
    rep = covering_check(c, 0.5)
    assert not rep.passed
    # the failing set, recorded from the run: every m fails for this construction
    assert rep.failing() == list(range(1, len(rep.rows) + 1))


def test_covering_single_pair(pow5):
    _, c = pow5
    rep = covering_check(c, delta_bound(c), M=1)
    assert len(rep.rows) == 1 and rep.passed
    with pytest.raises(IndexError):
        covering_check(c, 0.05, M=100)


def test_covering_csv(pow5):
    _, c = pow5
    text = covering_check(c, delta_bound(c), M=2).to_csv()
    lines = text.splitlines()
    assert lines[0] == "m,lo0,hi0,lo1,hi1,margin1,margin2"
    assert len(lines) == 3
    assert len(lines[1].split(",")[1].lstrip("-").replace(".", "").lstrip("0")) <= 17


def test_covering_catalog(catalog):
    _, c = catalog
    assert covering_check(c, delta_bound(c)).passed


def test_density_trivial_cases():
    whole = [Interval(1, 0, MP.log(mpf("0.5")), mpf(0) - mpf(10) ** -30)]
    assert lower_density_estimate(whole, eps="0.5") == 1
    assert lower_density_estimate([], eps="0.5", top_log=mpf(-1) / 1000) == 0
    with pytest.raises(ValueError):
        lower_density_estimate(whole, eps="1e-40")


def test_density_pow_positive_and_stable(pow5):
    _, c = pow5
    dl = delta_bound(c)
    ivs = intervals_for(c, 0, dl)
    top = min(max(iv.hi_log for iv in intervals_for(c, j, dl)) for j in (0, 1))
    # r at min I_{2m}: the last three usable m (m=1 is min I_2)
    vals = [lower_density_estimate(ivs, r=MP.exp(iv.lo_log), top_log=top) for iv in ivs[-5:-2]]
    assert min(vals) > 0
    assert max(vals) / min(vals) < 2
    first = lower_density_estimate(ivs, r=MP.exp(ivs[0].lo_log), top_log=top)
    assert first > 0


def test_density_table_pow(pow5):
    _, c = pow5
    for j in (0, 1):
        rows = density_table(c, delta_bound(c), j)
        assert rows and all(0 <= v <= 1 for _, v in rows)
        tail = [v for _, v in rows[4:]]
        assert min(tail) > 0.2
