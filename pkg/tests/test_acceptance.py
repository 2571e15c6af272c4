"""Acceptance criteria 1-9, each at its stated tolerance and time limit.

Run under pytest (one line per criterion appears in the terminal summary) or
directly: ``python3 tests/test_acceptance.py``.
"""

import functools
import math
import os
import subprocess
import sys
import tempfile
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACCEPTANCE_LINES, catalog_construction  # noqa: E402

from maxprod import CATALOG, DoublingCertificate, build_sequence, parse_weight  # noqa: E402
from maxprod._mp import mpf  # noqa: E402
from maxprod.analysis import (GridSpec, circle_functionals, counting_bound_check, grid_points,  # noqa: E402
                              jensen_check, jensen_radii, verify_theorem)
from maxprod.construction import construct, delta_bound, validate_sequence  # noqa: E402
from maxprod.intervals import covering_check  # noqa: E402
from maxprod.product import DEFAULT_TOL, DiscPoint, eps_of_ell, eval, log_modulus, make_products  # noqa: E402

GRID = GridSpec(first_decade=3, last_decade=8, angles=4096)


@functools.lru_cache(maxsize=None)
def _verified(spec):
    w, c = catalog_construction(spec)
    f0, f1 = make_products(c)
    t = time.perf_counter()
    res = verify_theorem(c, f0, f1, w, GRID)
    return res, time.perf_counter() - t


def _drift(rep):
    return "%s inf=%.3g sup=%.3g drift(inf,sup)=(%.3g,%.3g)" % (
        rep.name, rep.inf_ratio, rep.sup_ratio, rep.drift.get("inf", math.nan), rep.drift.get("sup", math.nan))


def criterion_1():
    t = time.perf_counter()
    w = parse_weight("pow:beta=1")
    c = build_sequence(w, DoublingCertificate.from_constant(2, w), 5, K=12)
    dt = time.perf_counter() - t
    n_ok = [int(n) for n in c.n] == [2 * 32 ** (k - 1) for k in range(1, 13)] and all(n == int(n) for n in c.n)
    a_ok = all(la == math.log(1024) and round(math.exp(la)) == 1024 for la in c.log_a)
    consts = (c.lambda_, c.mu, c.d, c.tau)
    c_ok = consts == (128.0, 8192.0, 0.5, 7.0)
    ok = n_ok and a_ok and c_ok and dt < 1
    return ok, "n exact %s, a=1024 %s, (lambda,mu,d,tau)=%s, %.3fs" % (n_ok, a_ok, consts, dt)


def criterion_2():
    t = time.perf_counter()
    bad = []
    for spec in CATALOG:
        c = construct(parse_weight(spec), K=20)
        rep = validate_sequence(c)
        if not rep.passed:
            bad.append("%s: %s" % (spec, rep.failures))
    dt = time.perf_counter() - t
    return not bad and dt < 5, "failures %s, %.2fs" % (bad or "none", dt)


def criterion_3():
    cons = [catalog_construction(spec)[1] for spec in CATALOG]
    t = time.perf_counter()
    bad, caught = [], []
    for spec, c in zip(CATALOG, cons):
        if not covering_check(c, delta_bound(c)).passed:
            bad.append(spec)
        adv = covering_check(c, 0.5)
        caught.append(not adv.passed)
    dt = time.perf_counter() - t
    ok = not bad and all(caught) and dt < 1
    return ok, "delta_bound failures %s, delta=0.5 detected for %d/%d, %.3fs" % (bad or "none", sum(caught),
                                                                               len(caught), dt)


def criterion_4():
    parts, ok = [], True
    for spec in CATALOG:
        res, dt = _verified(spec)
        r = res.reports["R1"]
        this = r.verdict and dt < 60
        ok = ok and this
        parts.append("%s %s %s %.1fs" % (spec, "pass" if this else "FAIL", _drift(r), dt))
    return ok, "; ".join(parts)


def criterion_5():
    parts, ok, total = [], True, 0.0
    for spec in CATALOG:
        res, dt = _verified(spec)
        total += dt
        reps = [r for k, r in res.reports.items() if k.startswith("R2_")]
        failing = [r for r in reps if not r.verdict]
        ok = ok and not failing and res.monotone_ok
        parts.append("%s %d/%d bands stable%s" % (spec, len(reps) - len(failing), len(reps),
                                                   " (worst %s)" % _drift(max(failing, key=lambda r: max(
                                                       r.drift.values()))) if failing else ""))
    ok = ok and total < 120
    return ok, "; ".join(parts) + "; %.1fs" % total


def criterion_6():
    parts, ok, total = [], True, 0.0
    for spec in CATALOG:
        res, dt = _verified(spec)
        total += dt
        reps = [r for k, r in res.reports.items() if k.startswith("R3_")]
        failing = [r.name for r in reps if not r.verdict]
        ok = ok and not failing and res.chain_ok
        parts.append("%s chain %s, bands failing %s" % (spec, "ok" if res.chain_ok else "BROKEN",
                                                          failing or "none"))
    ok = ok and total < 120
    return ok, "; ".join(parts) + "; %.1fs" % total


def criterion_7():
    parts, ok = [], True
    for spec in CATALOG:
        _, c = catalog_construction(spec)
        for j, p in enumerate(make_products(c)):
            rep = counting_bound_check(c, p)
            ok = ok and rep["passed"]
            parts.append("%s f%d max/min=%.4g%s" % (spec, j, rep["ratio"], "" if rep["passed"] else " FAIL"))
    return ok, "; ".join(parts)


def criterion_8():
    parts, ok = [], True
    for spec in CATALOG:
        _, c = catalog_construction(spec)
        worst = 0.0
        for p in make_products(c):
            radii = jensen_radii(p, 20)
            rep = jensen_check(p, radii, limit=1e-5)
            ok = ok and rep["passed"] and len(radii) == 20
            worst = max(worst, rep["max_diff"])
        parts.append("%s max|diff|=%.2e" % (spec, worst))
    return ok, "; ".join(parts)


def _truncation_agreement():
    worst = 0.0
    for spec in CATALOG:
        _, c = catalog_construction(spec)
        for p in make_products(c):
            for ell, _ in grid_points(c, GRID)[::3]:
                for num, den in ((0, 1), (1, 3), (17, 4099)):
                    z = DiscPoint(eps_of_ell(ell), num, den)
                    a, b = log_modulus(p, z, DEFAULT_TOL), log_modulus(p, z, DEFAULT_TOL / 100)
                    worst = max(worst, abs(a - b))
    return worst < 1e-9, worst


def _quadrature_doubling():
    worst = 0.0
    for spec in CATALOG:
        _, c = catalog_construction(spec)
        for p in make_products(c):
            for ell, _ in grid_points(c, GRID)[::4]:
                eps = eps_of_ell(ell)
                keys = [("log_plus",), ("log",)]
                v, q = circle_functionals(p, eps, keys)
                v2, _ = circle_functionals(p, eps, keys, q=2 * q)
                for k in keys:
                    worst = max(worst, abs(v2[k] - v[k]) / max(1.0, abs(v[k])))
    return worst < 1e-6, worst


def _conjugate_symmetry():
    worst = 0.0
    for spec in CATALOG:
        _, c = catalog_construction(spec)
        for p in make_products(c):
            for ell, _ in grid_points(c, GRID)[::3]:
                for num, den in ((1, 3), (5, 17), (1000, 4099)):
                    a = eval(p, DiscPoint(eps_of_ell(ell), num, den))
                    b = eval(p, DiscPoint(eps_of_ell(ell), den - num, den))
                    worst = max(worst, abs(a - b.conjugate()) / max(1.0, abs(a)))
    return worst < 1e-12, worst


def _cli_determinism():
    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, threads in enumerate((1, 4)):
            out = os.path.join(tmp, str(i))
            env = dict(os.environ, MAXPROD_THREADS=str(threads))
            subprocess.run([sys.executable, "-m", "maxprod", "verify", "--weight", "pow:beta=1", "--decades", "6",
                            "--angles", "1024", "--out", out], env=env, capture_output=True, check=False)
            files = sorted(os.listdir(out))
            outs.append({f: open(os.path.join(out, f), "rb").read() for f in files})
    return bool(outs[0]) and outs[0] == outs[1], len(outs[0])


def criterion_9():
    trunc, tw = _truncation_agreement()
    quad, qw = _quadrature_doubling()
    conj, cw = _conjugate_symmetry()
    det, nf = _cli_determinism()
    ok = trunc and quad and conj and det
    return ok, ("truncation tol/100 max diff %.1e %s; quadrature doubling max rel %.1e %s; conjugate max %.1e %s; "
                "CLI determinism over %d files %s" % (tw, trunc, qw, quad, cw, conj, nf, det))


CRITERIA = {
    1: ("construction oracle", criterion_1),
    2: ("validate_sequence suite", criterion_2),
    3: ("covering", criterion_3),
    4: ("joint maximality R1", criterion_4),
    5: ("means M_p", criterion_5),
    6: ("characteristic T, N", criterion_6),
    7: ("zero counting", criterion_7),
    8: ("Jensen identity", criterion_8),
    9: ("numerical hygiene", criterion_9),
}


def _line(i, ok, detail):
    return "criterion %d (%s): %s | %s" % (i, CRITERIA[i][0], "PASS" if ok else "FAIL", detail)


@pytest.mark.parametrize("i", sorted(CRITERIA))
def test_criterion(i):
    ok, detail = CRITERIA[i][1]()
    line = _line(i, ok, detail)
    ACCEPTANCE_LINES[i] = line
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = []
    for i in sorted(CRITERIA):
        ok, detail = CRITERIA[i][1]()
        results.append(ok)
        print(_line(i, ok, detail), flush=True)
    sys.exit(0 if all(results) else 1)
