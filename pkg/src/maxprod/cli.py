"""Command-line front end: ``maxprod construct | verify | eval``.

Exit codes: 0 pass, 1 property failure, 2 usage, 3 numeric-range shortfall.
"""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

from ._mp import MP, fmt, mpf, to_mpf
from .analysis import (GridSpec, QuadratureError, check_range, counting_bound_check, integrated_counting, jensen_check,
                       jensen_radii, verify_theorem)
from .construction import (ConstructionError, build_sequence, delta_bound, dumps, gamma_conditions, loads,
                           select_gamma, validate_sequence)
from .intervals import covering_check
from .product import DiscPoint, TruncationError, eval as eval_product, log_modulus, make_products
from .weight import DoublingError, WeightError, WeightSpecError, certify_doubling, parse_weight

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RANGE = 0, 1, 2, 3
CONSTRUCTION_FILE = "construction.txt"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    weight: Optional[str] = None
    gamma: Optional[float] = None
    K: int = 20
    delta: Optional[float] = None
    tol: float = 1e-13
    decades: int = 8
    angles: int = 4096
    out: Optional[str] = None
    a_probes: tuple = ()
    construction: Optional[str] = None

    def __post_init__(self):
        if not 0 < self.tol < 0.5:
            raise UsageError("--tol must lie in (0, 1/2)")
        if self.decades < 3:
            raise UsageError("--decades must be at least 3")
        if self.K < 5:
            raise UsageError("--K must be at least 5")
        if self.angles < 2:
            raise UsageError("--angles must be at least 2")


def _parser():
    ap = argparse.ArgumentParser(prog="maxprod", description="Jointly maximal products for doubling weights.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, weight_required=True):
        p.add_argument("--weight", required=weight_required, help="weight spec, e.g. pow:beta=1, log, exploglog")
        p.add_argument("--gamma", type=float, help="override the selected growth exponent")
        p.add_argument("--K", type=int, default=20, help="number of constructed radii (default 20)")
        p.add_argument("--tol", type=float, default=1e-13, help="truncation tolerance (default 1e-13)")
        p.add_argument("--out", help="output directory")

    c = sub.add_parser("construct", help="build and validate a construction")
    common(c)

    v = sub.add_parser("verify", help="run the covering, comparability, counting and Jensen checks")
    common(v, weight_required=False)
    v.add_argument("--construction", help="construction file (default: build from --weight)")
    v.add_argument("--delta", type=float, help="covering parameter (default: the admissible bound)")
    v.add_argument("--decades", type=int, default=8, help="deepest ell-decade of the grid (>= 3)")
    v.add_argument("--angles", type=int, default=4096, help="base angle count of the grid")
    v.add_argument("--a-probes", default="-1,2j",
                   help="a-values besides 0 for N(r, f, a); default -1,2j, empty string disables")

    e = sub.add_parser("eval", help="evaluate f0, f1 and log omega at one point")
    common(e)
    e.add_argument("eps", help="complement radius 1 - |z| (decimal text)")
    e.add_argument("theta_num", type=int)
    e.add_argument("theta_den", type=int)
    return ap


def _config(ns):
    probes = ()
    if getattr(ns, "a_probes", ""):
        try:
            probes = tuple(complex(s.strip()) for s in ns.a_probes.split(",") if s.strip())
        except ValueError as exc:
            raise UsageError("bad --a-probes: %s" % exc) from exc
    return RunConfig(command=ns.command, weight=ns.weight, gamma=ns.gamma, K=ns.K, delta=getattr(ns, "delta", None),
                     tol=ns.tol, decades=getattr(ns, "decades", 8), angles=getattr(ns, "angles", 4096), out=ns.out,
                     a_probes=probes, construction=getattr(ns, "construction", None))


def _build(cfg):
    w = parse_weight(cfg.weight)
    cert = certify_doubling(w)
    if cfg.gamma is None:
        gamma = select_gamma(cert)
    else:
        first, second = gamma_conditions(cfg.gamma, cert.alpha, cert.C)
        if not first:
            raise ConstructionError("gamma=%g violates 2**(gamma - alpha) / C > 1 (alpha=%.17g, C=%.17g)"
                                    % (cfg.gamma, cert.alpha, cert.C))
        if not second:
            logging.getLogger(__name__).warning("gamma=%g fails the second admissibility inequality", cfg.gamma)
        gamma = cfg.gamma
    return w, build_sequence(w, cert, gamma, K=cfg.K)


def _write(out, name, text):
    if out is None:
        return
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), "w", newline="\n") as fh:
        fh.write(text)


def _validation_csv(rep):
    cols = ["k", "n_ratio", "gap_floor", "log_a", "lambda_ok", "mu_ok", "chain_lhs", "chain_rhs", "chain_ok"]
    lines = [",".join(cols)]
    for row in rep.rows:
        vals = []
        for c in cols:
            v = row.get(c, "")
            if isinstance(v, bool):
                vals.append("true" if v else "false")
            elif c == "k" or v == "":
                vals.append(str(v))
            else:
                vals.append(fmt(v, 17))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def cmd_construct(cfg, stdout):
    w, c = _build(cfg)
    rep = validate_sequence(c)
    _write(cfg.out, CONSTRUCTION_FILE, dumps(c))
    _write(cfg.out, "validation.csv", _validation_csv(rep))
    print("weight %s gamma %s K %d" % (c.weight, fmt(c.gamma, 17), c.K), file=stdout)
    print("n = [%s]" % ", ".join(_ntext(n) for n in c.n[:8]) + (", ..." if c.K > 8 else ""), file=stdout)
    print("lambda %s mu %s d %s tau %s delta_bound %s" % tuple(fmt(x, 17) for x in
          (c.lambda_, c.mu, c.d, c.tau, delta_bound(c))), file=stdout)
    print("validation %s" % ("pass" if rep.passed else "fail: " + "; ".join(rep.failures)), file=stdout)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _ntext(n):
    return str(int(n)) if n < mpf(2) ** 64 else MP.nstr(n, 17)


def _load_or_build(cfg):
    if cfg.construction:
        with open(cfg.construction) as fh:
            c = loads(fh.read())
        return parse_weight(cfg.weight or c.weight), c
    if not cfg.weight:
        raise UsageError("verify needs --weight or --construction")
    return _build(cfg)


def cmd_verify(cfg, stdout):
    w, c = _load_or_build(cfg)
    bound = delta_bound(c)
    if cfg.delta is not None and not 0 < cfg.delta <= bound:
        raise UsageError("--delta must lie in (0, %.17g]" % bound)
    delta = bound if cfg.delta is None else cfg.delta
    f0, f1 = make_products(c)
    grid = GridSpec(first_decade=3, last_decade=cfg.decades, angles=cfg.angles)

    check_range((f0, f1), grid, cfg.tol)
    try:
        cover = covering_check(c, delta)
    except IndexError as exc:
        raise TruncationError("construction too short for the covering check: %s" % exc) from exc
    res = verify_theorem(c, f0, f1, w, grid, delta=delta, tol=cfg.tol)
    counts = {j: counting_bound_check(c, p) for j, p in ((0, f0), (1, f1))}
    jensen = {j: jensen_check(p, jensen_radii(p), tol=cfg.tol) for j, p in ((0, f0), (1, f1))}

    probes = {}
    for a in cfg.a_probes:
        for j, p in ((0, f0), (1, f1)):
            vals = [(row[0], integrated_counting(p, a, eps=row[0], tol=cfg.tol) / float(w.log_eval(row[0])))
                    for row in res.reports["R1"].rows]
            probes["a=%s f%d" % (_ctext(a), j)] = [[fmt(e, 17), fmt(v, 17)] for e, v in vals]

    verdicts = {"covering": cover.passed,
                "counting_f0": counts[0]["passed"], "counting_f1": counts[1]["passed"],
                "jensen_f0": jensen[0]["passed"], "jensen_f1": jensen[1]["passed"],
                "chain": res.chain_ok, "monotone_p": res.monotone_ok}
    verdicts.update({k: r.verdict for k, r in res.reports.items()})
    summary = {"weight": c.weight, "gamma": fmt(c.gamma, 17), "delta": fmt(delta, 17), "grid": grid.describe(),
               "verdicts": {k: "pass" if v else "fail" for k, v in verdicts.items()},
               "theorem": res.summary(),
               "counting": {str(j): {"min": fmt(d["min"], 17), "max": fmt(d["max"], 17)} for j, d in counts.items()},
               "jensen_max_diff": {str(j): fmt(d["max_diff"], 17) for j, d in jensen.items()},
               "a_probes": probes}
    _write(cfg.out, "covering.csv", cover.to_csv())
    for name, rep in res.reports.items():
        _write(cfg.out, "%s.csv" % name, rep.to_csv())
    _write(cfg.out, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for k, v in verdicts.items():
        print("%-14s %s" % (k, "pass" if v else "fail"), file=stdout)
    ok = all(verdicts.values())
    print("overall %s" % ("pass" if ok else "fail"), file=stdout)
    return EXIT_OK if ok else EXIT_FAIL


def _ctext(a):
    a = complex(a)
    if a.imag == 0:
        return fmt(a.real, 17)
    return "%s%s%sj" % (fmt(a.real, 17), "-" if a.imag < 0 else "+", fmt(abs(a.imag), 17))


def cmd_eval(cfg, stdout, eps_text, num, den):
    if den <= 0:
        raise UsageError("theta_den must be positive")
    try:
        eps = to_mpf(eps_text)
    except (ValueError, TypeError) as exc:
        raise UsageError("bad eps %r" % eps_text) from exc
    w, c = _build(cfg)
    z = DiscPoint(eps, num, den)
    for j, p in enumerate(make_products(c)):
        v = eval_product(p, z, cfg.tol)
        lm = log_modulus(p, z, cfg.tol)
        sign = "-" if math.copysign(1.0, v.imag) < 0 else "+"
        print("f%d = %s %s %si   log|f%d| = %s" % (j, fmt(v.real, 17), sign, fmt(abs(v.imag), 17), j, fmt(lm, 17)),
              file=stdout)
    print("log omega = %s" % fmt(w.log_eval(eps), 17), file=stdout)
    return EXIT_OK


def main(argv=None, stdout=None):
    stdout = sys.stdout if stdout is None else stdout
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _config(ns)
        if cfg.command == "construct":
            return cmd_construct(cfg, stdout)
        if cfg.command == "verify":
            return cmd_verify(cfg, stdout)
        return cmd_eval(cfg, stdout, ns.eps, ns.theta_num, ns.theta_den)
    except (UsageError, WeightSpecError) as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (TruncationError, WeightError) as exc:
        print("range shortfall: %s" % exc, file=sys.stderr)
        return EXIT_RANGE
    except (DoublingError, ConstructionError, QuadratureError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
