"""Growth and value-distribution functionals of the products and the checks of
their comparability with omega.

Circle means use the trapezoidal rule on a prime number of equispaced angles
(see :func:`maxprod._mp.quad_nodes`), doubling the nominal node count until
successive estimates agree.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ._mp import MP, as_int, fmt, mpf, quad_nodes, to_mpf
from .intervals import intervals_for
from .product import (DEFAULT_TOL, TruncationError, _exponent, _min_eps_for, circle_values,
                      ell_of, eps_of_ell, values_at, zero_point, zeros_up_to)

Q_MAX = 2 ** 20
RTOL = 1e-6
NUDGE = 1e-9
MAX_REFINE = 48
DRIFT = 2.0
CHAIN_SLACK = 1e-4 + math.log(2)
P_VALUES = (0.5, 1.0, 2.0)
# n(1 - s) -> log a from below; for huge n the gap is under the working precision
ROUND_SLACK = mpf(2) ** -200


class QuadratureError(ArithmeticError):
    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


def thread_count():
    env = os.environ.get("MAXPROD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# Circle means
# ---------------------------------------------------------------------------

def on_zero_circle(p, eps):
    ell = ell_of(eps)
    return any(la > 0 and _exponent(la, n, ell) == 0.0 for la, n in p.factors)


def _quad_eps(p, eps):
    """eps itself, or eps moved off a zero circle by ell -> ell*(1+NUDGE)."""
    eps = to_mpf(eps)
    if on_zero_circle(p, eps):
        return eps_of_ell(ell_of(eps) * (1 + mpf(NUDGE)))
    return eps


def _mode_key(mode, p_exp=None, a=None):
    if mode in ("log", "log_plus"):
        return (mode,)
    if mode == "p_power":
        if p_exp is None or not p_exp > 0:
            raise ValueError("p_power needs p_exp > 0")
        return ("p_power", float(p_exp))
    if mode == "shift":
        return ("shift", complex(a))
    raise ValueError("unknown mode %r" % (mode,))


def _functional(key, lm, arg):
    # p_power is returned as log of the mean so huge moduli cannot overflow
    if key[0] == "log":
        return float(np.mean(lm))
    if key[0] == "log_plus":
        return float(np.mean(np.maximum(lm, 0.0)))
    if key[0] == "p_power":
        v = key[1] * lm
        top = float(np.max(v))
        if top == -np.inf:
            return -math.inf
        return top + math.log(float(np.mean(np.exp(v - top))))
    z = np.exp(lm + 1j * arg) - key[1]
    with np.errstate(divide="ignore"):
        return float(np.mean(np.log(np.abs(z))))


def _close(key, a, b, rtol):
    if a == b:
        return True
    if key[0] == "p_power":
        return abs(a - b) <= rtol  # log scale: relative change of the mean
    # log means near 0 (circles just off a zero circle) converge only like 1/q,
    # so the relative test gets an absolute floor at the same level
    return abs(a - b) <= rtol * max(1.0, abs(a))


def circle_functionals(p, eps, keys, q=64, tol=DEFAULT_TOL, rtol=RTOL, q_max=Q_MAX):
    """Converged trapezoidal circle means for several modes at once.

    Returns ``{key: value}`` and the nominal node count used.
    """
    q = int(q)
    if q < 2:
        raise ValueError("q must be at least 2")
    e = _quad_eps(p, eps)
    want_arg = any(k[0] == "shift" for k in keys)
    prev = None
    while True:
        lm, arg = circle_values(p, e, quad_nodes(q), tol, want_arg)
        cur = {k: _functional(k, lm, arg) for k in keys}
        if prev is not None and all(_close(k, cur[k], prev[k], rtol) for k in keys):
            return cur, q
        if q >= q_max:
            bad = [k for k in keys if prev is None or not _close(k, cur[k], prev[k], rtol)]
            raise QuadratureError(
                "circle mean not converged at q=%d for %s: last estimates %s"
                % (q, bad, [(prev or {}).get(bad[0]), cur[bad[0]]]),
                estimates=(prev, cur))
        prev = cur
        q *= 2


def circle_mean(p, eps, q=64, mode="log", p_exp=None, tol=DEFAULT_TOL, rtol=RTOL):
    """Mean over |z| = 1 - eps of log|f|, log+|f| or |f|**p_exp."""
    key = _mode_key(mode, p_exp)
    vals, _ = circle_functionals(p, eps, [key], q=q, tol=tol, rtol=rtol)
    v = vals[key]
    return math.exp(v) if key[0] == "p_power" else v


def log_mean_p(p, eps, p_exp, q=64, tol=DEFAULT_TOL):
    """log M_p(r, f)."""
    key = _mode_key("p_power", p_exp)
    vals, _ = circle_functionals(p, eps, [key], q=q, tol=tol)
    return vals[key] / p_exp


def log_max_modulus(p, eps, q=1024, tol=DEFAULT_TOL, top=8, rel=1e-9):
    """log M_inf(r, f): grid maximum refined around the best cells."""
    den = quad_nodes(q)
    lm, _ = circle_values(p, eps, den, tol)
    order = np.argsort(-lm, kind="stable")[:top]
    best_pts = [(float(lm[i]), int(i)) for i in order]
    best = best_pts[0][0]
    for _ in range(MAX_REFINE):
        den *= 2
        nums = sorted({2 * n + d for _, n in best_pts for d in (-1, 0, 1)})
        vals, _ = values_at(p, eps, nums, den, tol)
        cand = sorted(zip(vals.tolist(), nums), key=lambda t: (-t[0], t[1]))[:top]
        best_pts = cand
        new = cand[0][0]
        improved = new - best
        best = max(best, new)
        if improved < rel:
            break
    return best


def max_modulus(p, eps, q=1024, tol=DEFAULT_TOL):
    return math.exp(log_max_modulus(p, eps, q, tol))


# ---------------------------------------------------------------------------
# Counting functions
# ---------------------------------------------------------------------------

def _ell_arg(r, eps):
    if (r is None) == (eps is None):
        raise ValueError("give exactly one of r, eps")
    if eps is not None:
        return ell_of(eps), to_mpf(eps)
    r = to_mpf(r)
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    return -MP.log(r), 1 - r


def counting_function(p, r=None, eps=None):
    """n(r, f, 0): zeros with modulus <= r, with multiplicity (int when it fits)."""
    total = mpf(0)
    for _, n in zeros_up_to(p, r=r, eps=eps):
        total += n
    try:
        return as_int(total, max_bits=1 << 14)
    except OverflowError:
        return total


def _leading_coefficient(p):
    """f - 1 = c z**n + ...: (log|c|, n) from the first non-trivial factor."""
    for la, n in p.factors:
        if la > 0:
            return math.log(2 * math.sinh(la)), n
    return None


def integrated_counting(p, a=0, r=None, eps=None, q=64, tol=DEFAULT_TOL):
    """N(r, f, a).

    a = 0 is summed exactly over the zero circles. Otherwise Jensen's formula
    is evaluated numerically; for a = f(0) = 1 the constant is the leading
    Taylor coefficient of f - 1.
    """
    ell, e = _ell_arg(r, eps)
    if a == 0:
        total = mpf(0)
        for la, n in p.factors:
            if la > 0 and mpf(la) / n >= ell:
                total += mpf(la) - n * ell
        return float(total)
    key = _mode_key("shift", a=a)
    if a == 1:
        lead = _leading_coefficient(p)
        if lead is None:
            raise ValueError("f is identically 1: N(r, f, 1) is undefined")
        base = lead[0]
    else:
        base = math.log(abs(1 - complex(a)))
    vals, _ = circle_functionals(p, e, [key], q=q, tol=tol)
    return vals[key] - base


def characteristic(p, eps, q=64, tol=DEFAULT_TOL):
    """T(r, f) = mean of log+|f| (f is analytic)."""
    return circle_mean(p, eps, q=q, mode="log_plus", tol=tol)


@dataclass
class CountingData:
    radii: list
    n_values: list
    N_values: list


def counting_data(p, eps_list):
    eps_list = sorted((to_mpf(e) for e in eps_list), reverse=True)
    return CountingData(radii=eps_list,
                        n_values=[counting_function(p, eps=e) for e in eps_list],
                        N_values=[integrated_counting(p, 0, eps=e) for e in eps_list])


def counting_bound_check(c, p):
    """n(s_m)(1 - s_m) at every zero circle, and the single-circle bounds.

    ``c`` is accepted for interface symmetry; everything needed sits in ``p``.
    """
    rows = []
    cum = mpf(0)
    single_ok = True
    for m, (la, n) in enumerate(p.factors, start=1):
        if la <= 0:
            continue
        ell_s = mpf(la) / n
        one_minus_s = -MP.expm1(-ell_s)
        cum += n
        v = n * one_minus_s
        row = {"m": m, "s": MP.exp(-ell_s), "n_cum": cum, "value": float(cum * one_minus_s),
               "single": float(v), "log_a": la}
        if MP.exp(-ell_s) > mpf(1) / 4:
            row["single_ok"] = bool(mpf(la) / 2 <= v <= mpf(la) * (1 + ROUND_SLACK))
            single_ok = single_ok and row["single_ok"]
        rows.append(row)
    vals = [r["value"] for r in rows]
    lo, hi = (min(vals), max(vals)) if vals else (math.nan, math.nan)
    passed = bool(vals) and lo > 0 and hi / lo < 10 and single_ok
    return {"rows": rows, "min": lo, "max": hi, "ratio": hi / lo if vals else math.nan,
            "single_ok": single_ok, "passed": passed}


# ---------------------------------------------------------------------------
# Jensen cross-check
# ---------------------------------------------------------------------------

def jensen_radii(p, count=20):
    """``count`` radii log-uniform in ell across the first three zero circles, kept off every circle."""
    ells = [mpf(la) / n for la, n in p.factors if la > 0]
    if not ells:
        return []
    hi = MP.log(ells[0] * 10)
    lo = MP.log(ells[min(2, len(ells) - 1)] / 10)
    floor = ell_of(_min_eps_for(p, DEFAULT_TOL)) * 2 if p.tau != math.inf else mpf(0)
    out = []
    for i in range(count):
        ell = max(MP.exp(hi + (lo - hi) * i / max(count - 1, 1)), floor)
        if any(abs(ell / e - 1) < mpf("1e-6") for e in ells):
            ell *= 1 + mpf("1e-4")
        out.append(eps_of_ell(ell))
    return out


def jensen_check(p, eps_list, q=64, tol=DEFAULT_TOL, limit=1e-5):
    rows = []
    for e in eps_list:
        lhs = circle_mean(p, e, q=q, mode="log", tol=tol)
        rhs = integrated_counting(p, 0, eps=e)
        rows.append({"eps": e, "mean_log": lhs, "N": rhs, "diff": abs(lhs - rhs)})
    worst = max((r["diff"] for r in rows), default=0.0)
    return {"rows": rows, "max_diff": worst, "passed": worst < limit}


# ---------------------------------------------------------------------------
# Ratio reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    first_decade: int = 3
    last_decade: int = 8
    angles: int = 4096
    endpoints: bool = True

    def __post_init__(self):
        if self.first_decade < 1 or self.last_decade < self.first_decade:
            raise ValueError("need 1 <= first_decade <= last_decade")
        if self.angles < 2:
            raise ValueError("need at least two angles")

    def describe(self):
        return "ell-decades %d..%d, %d angles%s" % (
            self.first_decade, self.last_decade, quad_nodes(self.angles),
            ", decade radii + interval endpoints" if self.endpoints else ", decade radii")


def decade_of(ell):
    """d with ell in (10**-(d+1), 10**-d]."""
    d = int(MP.floor(-MP.log10(ell) + mpf(10) ** -40))
    return d


def grid_points(c, grid, delta=None):
    """Sorted (ell, decade) pairs: decade radii plus interval endpoints inside the decades."""
    from .construction import delta_bound
    top = mpf(10) ** -grid.first_decade
    bottom = mpf(10) ** -(grid.last_decade + 1)
    ells = {mpf(10) ** -d for d in range(grid.first_decade, grid.last_decade + 1)}
    if grid.endpoints:
        delta = delta_bound(c) if delta is None else delta
        for j in (0, 1):
            for iv in intervals_for(c, j, delta):
                for x in (iv.lo_log, iv.hi_log):
                    if bottom < -x <= top:
                        ells.add(-x)
    return [(ell, decade_of(ell)) for ell in sorted(ells, reverse=True)]


@dataclass
class RatioReport:
    name: str
    grid: str
    rows: list = field(default_factory=list)  # (eps, decade, theta_den or None, values)
    inf_ratio: float = math.nan
    sup_ratio: float = math.nan
    per_decade: Dict[int, tuple] = field(default_factory=dict)
    first_decade: int = 3
    verdict: bool = False
    drift: Dict[str, float] = field(default_factory=dict)

    def add(self, eps, decade, values, theta_den=None):
        self.rows.append((eps, decade, theta_den, np.atleast_1d(np.asarray(values, dtype=float))))

    def finish(self):
        per = {}
        for _, d, _, v in self.rows:
            lo, hi = float(np.min(v)), float(np.max(v))
            if d in per:
                lo, hi = min(lo, per[d][0]), max(hi, per[d][1])
            per[d] = (lo, hi)
        self.per_decade = dict(sorted(per.items()))
        if not per:
            self.verdict = False
            return self
        self.inf_ratio = min(v[0] for v in per.values())
        self.sup_ratio = max(v[1] for v in per.values())
        ok = self.inf_ratio > 0 and math.isfinite(self.sup_ratio)
        worst_inf = worst_sup = 1.0
        keys = list(self.per_decade)
        for d0, d1 in zip(keys, keys[1:]):
            if d0 < self.first_decade:
                continue
            (i0, s0), (i1, s1) = self.per_decade[d0], self.per_decade[d1]
            worst_inf = max(worst_inf, _fold(i0, i1))
            worst_sup = max(worst_sup, _fold(s0, s1))
        self.drift = {"inf": worst_inf, "sup": worst_sup}
        self.verdict = bool(ok and worst_inf < DRIFT and worst_sup < DRIFT)
        return self

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["eps", "theta_num", "theta_den", "value"])
        for eps, _, den, vals in self.rows:
            e = fmt(eps, 17)
            if den is None:
                wr.writerow([e, "", "", fmt(float(vals[0]), 17)])
            else:
                for i, v in enumerate(vals.tolist()):
                    wr.writerow([e, i, den, fmt(v, 17)])
        return buf.getvalue()

    def summary(self):
        return {"name": self.name, "grid": self.grid, "inf": _jnum(self.inf_ratio), "sup": _jnum(self.sup_ratio),
                "per_decade": {str(d): [_jnum(a), _jnum(b)] for d, (a, b) in self.per_decade.items()},
                "drift": {k: _jnum(v) for k, v in self.drift.items()},
                "verdict": "pass" if self.verdict else "fail"}


def _fold(a, b):
    if a <= 0 or b <= 0 or not (math.isfinite(a) and math.isfinite(b)):
        return math.inf
    return max(a / b, b / a)


def _jnum(x):
    # fixed 17-digit text keeps the JSON byte-stable and handles inf/nan
    return fmt(float(x), 17)


@dataclass
class VerifyResult:
    reports: Dict[str, RatioReport]
    chain_ok: bool
    chain_rows: list
    monotone_ok: bool
    e_min: Dict[int, float]
    m_inf_sup: Dict[int, float]
    zero_probe: list

    @property
    def passed(self):
        return all(r.verdict for r in self.reports.values()) and self.chain_ok and self.monotone_ok

    def summary(self):
        return {"reports": {k: r.summary() for k, r in self.reports.items()},
                "chain": "pass" if self.chain_ok else "fail",
                "monotone_p": "pass" if self.monotone_ok else "fail",
                "e_min_log_ratio": {str(j): _jnum(v) for j, v in self.e_min.items()},
                "m_inf_sup_log_ratio": {str(j): _jnum(v) for j, v in self.m_inf_sup.items()},
                "zero_probe_min_R1": _jnum(min((r["R1"] for r in self.zero_probe), default=math.nan))}

    def to_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def check_range(products, grid, tol=DEFAULT_TOL):
    """Raise TruncationError naming the deepest usable decade if the grid is out of reach."""
    need = eps_of_ell(mpf(10) ** -(grid.last_decade + 1))
    for p in products:
        if p.tau == math.inf:
            continue
        m = _min_eps_for(p, tol)
        if m >= need:
            usable = int(MP.floor(-MP.log10(ell_of(m)))) - 1
            raise TruncationError("grid reaches ell-decade %d but the construction only certifies "
                                  "decades up to %d at tol=%g" % (grid.last_decade, usable, tol), min_eps=m)


def _radius_job(f0, f1, lw, eps, angles, tol):
    out = {"eps": eps, "log_w": lw}
    lms = []
    for j, p in ((0, f0), (1, f1)):
        lm, _ = circle_values(p, eps, angles, tol)
        lms.append(lm)
        keys = [("log_plus",)] + [("p_power", pe) for pe in P_VALUES]
        vals, q = circle_functionals(p, eps, keys, tol=tol)
        out[j] = {"T": vals[("log_plus",)],
                  "logM": {pe: vals[("p_power", pe)] / pe for pe in P_VALUES},
                  "logMinf": log_max_modulus(p, eps, tol=tol),
                  "N": integrated_counting(p, 0, eps=eps),
                  "min_log": float(np.min(lm)), "q": q}
    top = np.maximum(lms[0], lms[1])
    out["R1"] = np.exp(top - lw) * (1 + np.exp(-np.abs(lms[0] - lms[1])))
    return out


def verify_theorem(c, f0, f1, w, grid=None, delta=None, tol=DEFAULT_TOL, threads=None):
    """Ratio reports for |f0|+|f1| ~ omega, M_p ~ omega and T ~ N ~ log omega on the grid."""
    from .construction import delta_bound
    grid = GridSpec() if grid is None else grid
    delta = delta_bound(c) if delta is None else delta
    check_range((f0, f1), grid, tol)
    pts = grid_points(c, grid, delta)
    angles = quad_nodes(grid.angles)
    desc = grid.describe()

    def job(pt):
        ell, _ = pt
        eps = eps_of_ell(ell)
        return _radius_job(f0, f1, float(w.log_eval(eps)), eps, angles, tol)

    n_threads = thread_count() if threads is None else max(1, int(threads))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as ex:
            results = list(ex.map(job, pts))
    else:
        results = [job(pt) for pt in pts]

    fd = grid.first_decade
    reps = {"R1": RatioReport("R1", desc, first_decade=fd)}
    for j in (0, 1):
        for pe in P_VALUES + (math.inf,):
            reps["R2_p%s_f%d" % (_pname(pe), j)] = RatioReport("R2_p%s_f%d" % (_pname(pe), j), desc, first_decade=fd)
        reps["R3_T_f%d" % j] = RatioReport("R3_T_f%d" % j, desc, first_decade=fd)
        reps["R3_N_f%d" % j] = RatioReport("R3_N_f%d" % j, desc, first_decade=fd)

    chain_ok = monotone_ok = True
    chain_rows = []
    ivs = {j: intervals_for(c, j, delta) for j in (0, 1)}
    e_min = {0: math.inf, 1: math.inf}
    m_sup = {0: -math.inf, 1: -math.inf}
    for (ell, d), res in zip(pts, results):
        eps, lw = res["eps"], res["log_w"]
        reps["R1"].add(eps, d, res["R1"], theta_den=angles)
        for j in (0, 1):
            rj = res[j]
            for pe in P_VALUES:
                reps["R2_p%s_f%d" % (_pname(pe), j)].add(eps, d, math.exp(rj["logM"][pe] - lw))
            reps["R2_pinf_f%d" % j].add(eps, d, math.exp(rj["logMinf"] - lw))
            reps["R3_T_f%d" % j].add(eps, d, rj["T"] / lw)
            reps["R3_N_f%d" % j].add(eps, d, rj["N"] / lw)
            ok1 = rj["N"] <= rj["T"] + CHAIN_SLACK
            ok2 = rj["T"] + CHAIN_SLACK <= max(rj["logMinf"], 0.0) + 2 * CHAIN_SLACK
            chain_ok = chain_ok and ok1 and ok2
            chain_rows.append({"eps": eps, "j": j, "N": rj["N"], "T": rj["T"], "logMinf": rj["logMinf"],
                               "ok": bool(ok1 and ok2)})
            seq = [rj["logM"][pe] for pe in P_VALUES] + [rj["logMinf"]]
            if any(b < a - 1e-9 * max(1.0, abs(a)) for a, b in zip(seq, seq[1:])):
                monotone_ok = False
            m_sup[j] = max(m_sup[j], rj["logMinf"] - lw)
            x = -ell
            if any(iv.lo_log <= x <= iv.hi_log for iv in ivs[j]):
                e_min[j] = min(e_min[j], rj["min_log"] - lw)
    for r in reps.values():
        r.finish()
    return VerifyResult(reports=reps, chain_ok=chain_ok, chain_rows=chain_rows, monotone_ok=monotone_ok,
                        e_min=e_min, m_inf_sup=m_sup,
                        zero_probe=zero_probe(f0, f1, w, grid, tol))


def _pname(pe):
    return {0.5: "0.5", 1.0: "1", 2.0: "2"}.get(pe, "inf")


def zero_probe(f0, f1, w, grid, tol=DEFAULT_TOL):
    """R1 at the first zero of f0 on every zero circle inside the grid's decades."""
    rows = []
    top = mpf(10) ** -grid.first_decade
    bottom = mpf(10) ** -(grid.last_decade + 1)
    for m, (la, n) in enumerate(f0.factors, start=1):
        if la <= 0:
            continue
        ell = mpf(la) / n
        if not bottom < ell <= top:
            continue
        try:
            z = zero_point(f0, m)
        except OverflowError:
            continue
        lm1, _ = values_at(f1, z.eps, [z.angle_num], z.angle_den, tol)
        lm0, _ = values_at(f0, z.eps, [z.angle_num], z.angle_den, tol)
        lw = float(w.log_eval(z.eps))
        rows.append({"m": m, "eps": z.eps, "log_f0": float(lm0[0]), "R1": math.exp(float(lm1[0]) - lw)})
    return rows
