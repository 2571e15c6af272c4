"""Intervals I_{2m+j} where |f_j| is comparable to omega, their covering and density.

Endpoints are carried as log-radii (negative mpf numbers); for deep indices
they are of size log(a)/n and would underflow in doubles.
"""

import csv
import io
from dataclasses import dataclass, field
from typing import List

from ._mp import MP, fmt, mpf, to_mpf


@dataclass(frozen=True)
class Interval:
    m: int
    j: int
    lo_log: object
    hi_log: object

    @property
    def index(self):
        return 2 * self.m + self.j


def interval(c, j, m, delta):
    """I_{2m+j} for the construction ``c`` and covering parameter ``delta``."""
    if j not in (0, 1):
        raise ValueError("parity must be 0 or 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    i = 2 * m + j
    if m < 1 or i + 2 > len(c.log_a):
        raise IndexError("I_%d needs a_%d, outside the constructed range 1..%d" % (i, i + 2, len(c.log_a)))
    delta = mpf(delta)
    inner = mpf(c.log_a_at(i)) / c.n_at(i)          # -log s_i
    outer = mpf(c.log_a_at(i + 2)) / c.n_at(i + 2)  # -log s_{i+2}
    rho = c.n_at(i) / c.n_at(i + 1)
    lo = -(1 - delta) * inner - delta * outer
    hi = -delta * rho * inner - (1 - delta * rho) * outer
    if not (-inner < lo < hi < -outer):
        raise ArithmeticError("I_%d is not nested between its zero circles" % i)
    return Interval(m=m, j=j, lo_log=lo, hi_log=hi)


def max_m(c, j):
    return (len(c.log_a) - 2 - j) // 2


def intervals_for(c, j, delta):
    return [interval(c, j, m, delta) for m in range(1, max_m(c, j) + 1)]


@dataclass
class CoverReport:
    delta: float
    rows: List[dict] = field(default_factory=list)
    disjoint: bool = True
    passed: bool = True

    def failing(self):
        return [r["m"] for r in self.rows if not r["ok"]]

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["m", "lo0", "hi0", "lo1", "hi1", "margin1", "margin2"])
        for r in self.rows:
            wr.writerow([r["m"]] + [fmt(r[k], 17) for k in ("lo0", "hi0", "lo1", "hi1", "margin1", "margin2")])
        return buf.getvalue()


def covering_check(c, delta, M=None):
    """Check that consecutive intervals of alternating parity overlap for m = 1..M.

    margin1 = log max I_{2m} - log min I_{2m+1},
    margin2 = log max I_{2m+1} - log min I_{2m+2}; both must be >= 0.
    """
    top = min(max_m(c, 0) - 1, max_m(c, 1))
    M = top if M is None else M
    if not 1 <= M <= top:
        raise IndexError("M=%s outside 1..%d" % (M, top))
    rep = CoverReport(delta=float(delta))
    for m in range(1, M + 1):
        e0, e1, e2 = interval(c, 0, m, delta), interval(c, 1, m, delta), interval(c, 0, m + 1, delta)
        m1 = e0.hi_log - e1.lo_log
        m2 = e1.hi_log - e2.lo_log
        rep.rows.append({"m": m, "lo0": e0.lo_log, "hi0": e0.hi_log, "lo1": e1.lo_log, "hi1": e1.hi_log,
                         "margin1": m1, "margin2": m2, "ok": bool(m1 >= 0 and m2 >= 0)})
    for j in (0, 1):
        ivs = intervals_for(c, j, delta)
        if any(not a.hi_log < b.lo_log for a, b in zip(ivs, ivs[1:])):
            rep.disjoint = False
    rep.passed = rep.disjoint and all(r["ok"] for r in rep.rows)
    return rep


def _eps(log_r):
    return -MP.expm1(log_r)


def lower_density_estimate(intervals, r=None, eps=None, top_log=None):
    """m(E cap [r, r_top)) / (r_top - r), with lengths taken as differences of complements.

    ``r_top`` defaults to the largest endpoint among ``intervals``; pass ``top_log``
    to measure against a common coverage limit.
    """
    if (r is None) == (eps is None):
        raise ValueError("give exactly one of r, eps")
    log_r = MP.log1p(-to_mpf(eps)) if eps is not None else MP.log(to_mpf(r))
    if top_log is None:
        if not intervals:
            raise ValueError("no intervals and no coverage limit")
        top_log = max(iv.hi_log for iv in intervals)
    if not log_r < top_log:
        raise ValueError("r beyond the covered range")
    total = _eps(log_r) - _eps(top_log)
    covered = mpf(0)
    for iv in intervals:
        a, b = max(iv.lo_log, log_r), min(iv.hi_log, top_log)
        if a < b:
            covered += _eps(a) - _eps(b)
    return covered / total


def density_table(c, delta, j, min_gap_decades=3):
    """Lower-density estimates of E_j at every interval endpoint.

    Both parities are measured against the common coverage limit (the smaller
    of the two largest endpoints). Endpoints within ``min_gap_decades`` decades
    (in 1 - r) of that limit are dropped: there the finite construction, not
    E_j, decides the ratio.
    """
    ivs = {p: intervals_for(c, p, delta) for p in (0, 1)}
    top = min(max(iv.hi_log for iv in ivs[p]) for p in (0, 1))
    limit = _eps(top) * mpf(10) ** min_gap_decades
    rows = []
    points = sorted({x for p in (0, 1) for iv in ivs[p] for x in (iv.lo_log, iv.hi_log)})
    for x in points:
        e = _eps(x)
        if e < limit:
            continue
        rows.append((e, lower_density_estimate(ivs[j], eps=e, top_log=top)))
    return rows
