"""The lacunary exponent sequence behind the two products.

Radii ``t_k`` are chosen so that ``omega(t_{k+1}) / omega(t_k) = 2**gamma``,
starting from ``t_1 = 1/2``; then ``n_k = floor(1/(1 - t_k))`` and
``a_k = omega(1 - 1/n_{k+2}) / omega(1 - 1/n_k)``.

Radii are stored as complements ``eps_k = 1 - t_k`` and the exponents ``n_k``
as integer-valued mpf numbers (``man * 2**exp``), which keeps even
``n_k ~ exp(1e24)`` exact to the working precision.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List

from ._mp import MP, PREC, mpf
from .weight import LOG2

log = logging.getLogger(__name__)

FORMAT_HEADER = "maxprod-construction 1"
GAMMA_CAP = 1e4


class ConstructionError(RuntimeError):
    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


@dataclass(frozen=True)
class Construction:
    weight: str
    gamma: float
    B: float
    alpha: float
    C: float
    eps: tuple
    n: tuple
    log_a: tuple
    lambda_: float
    mu: float
    d: float
    tau: float

    @property
    def K(self):
        return len(self.n)

    # 1-based accessors matching the index conventions of the construction
    def n_at(self, k):
        if not 1 <= k <= self.K:
            raise IndexError("n_%d outside constructed range 1..%d" % (k, self.K))
        return self.n[k - 1]

    def eps_at(self, k):
        if not 1 <= k <= self.K:
            raise IndexError("eps_%d outside constructed range 1..%d" % (k, self.K))
        return self.eps[k - 1]

    def log_a_at(self, k):
        if not 1 <= k <= len(self.log_a):
            raise IndexError("a_%d outside constructed range 1..%d" % (k, len(self.log_a)))
        return self.log_a[k - 1]

    def zero_log_radius(self, k):
        """log s_k = -log(a_k) / n_k, as an mpf."""
        return -mpf(self.log_a_at(k)) / self.n_at(k)


def closed_form_constants(gamma, alpha, C):
    """(lambda, mu, d, tau) for the given gamma and envelope constants."""
    lam = 2.0 ** (2 * gamma - alpha) / C
    mu = 2.0 ** (2 * gamma + alpha) * C
    d = 2.0 ** (-1.0 / alpha)
    tau = 2.0 ** (gamma / alpha) / C ** (1.0 / alpha) - 1
    return lam, mu, d, tau


def gamma_conditions(gamma, alpha, C):
    """Both admissibility inequalities for gamma, as a pair of booleans."""
    l2c = math.log2(C)
    first = 2.0 ** (gamma - alpha) / C > 1
    den = 2 * gamma - alpha - l2c
    if den <= 0:
        return first, False
    lhs = (2 * gamma + alpha + l2c) / den
    rhs = 2.0 ** (-1.0 / alpha) * (2.0 ** (gamma / alpha) / C ** (1.0 / alpha) - 1)
    return first, lhs < rhs


def select_gamma(cert):
    """Smallest gamma on the ladder alpha + log2 C + m/4 (m >= 1) satisfying both conditions."""
    base = cert.alpha + cert.log2_C
    m = 1
    while True:
        gamma = base + m / 4
        if gamma > GAMMA_CAP:
            raise RuntimeError("no admissible gamma below %g (alpha=%g, C=%g)" % (GAMMA_CAP, cert.alpha, cert.C))
        if all(gamma_conditions(gamma, cert.alpha, cert.C)):
            return gamma
        m += 1


def _floor_exp(L):
    return MP.floor(MP.exp(L))


def _solve_next(w, y, lo, hi, tol):
    """Bisection in L = log(1/eps) for log omega = y, resolved until floor(e**L) is fixed."""
    f = w.log_of_L
    while True:
        if hi - lo <= tol and _floor_exp(lo) == _floor_exp(hi):
            break
        mid = (lo + hi) / 2
        if not lo < mid < hi:
            break
        if f(mid) < y:
            lo = mid
        else:
            hi = mid
    # a root sitting on 1/N up to rounding is taken as exactly 1/N, otherwise
    # floor() would flip between N-1 and N with the last bit of y
    slack = mpf(2) ** (24 - PREC) * max(1, abs(y))
    n_lo, n_hi = _floor_exp(lo), _floor_exp(hi)
    for N in sorted({n_lo, n_hi, n_hi + 1}):
        if 1 <= N < mpf(2) ** (PREC - 8) and abs(f(MP.log(N)) - y) <= slack:
            return MP.log(N), N, 1 / N
    mid = (lo + hi) / 2
    return mid, MP.floor(MP.exp(mid)), MP.exp(-mid)


def build_sequence(w, cert, gamma, K=24, tol=1e-14):
    """Build eps_k, n_k (k = 1..K) and log a_k (k = 1..K-2).

    K is truncated, with a warning, when the weight's trusted range is exhausted.
    """
    if K < 5:
        raise ValueError("need K >= 5, got %d" % K)
    gamma = float(gamma)
    step = mpf(gamma) * LOG2
    Lmax = w.max_log_inv_eps
    f = w.log_of_L

    L = LOG2
    y = f(L)
    Ls, ns, epss = [L], [mpf(2)], [mpf("0.5")]
    for k in range(2, K + 1):
        y = y + step
        if f(Lmax) < y:
            if k - 1 >= 5:
                log.warning("weight %s trusted range exhausted at k=%d; truncating K to %d", w.name, k, k - 1)
                break
            raise ConstructionError(
                "cannot bracket t_%d: weight %s does not reach log omega=%s within its trusted range"
                % (k, w.name, MP.nstr(y, 8)), k=k)
        L, n, e = _solve_next(w, y, Ls[-1], Lmax, tol)
        Ls.append(L)
        ns.append(n)
        epss.append(e)

    log_a = []
    for k in range(1, len(ns) - 1):
        la = f(MP.log(ns[k + 1])) - f(MP.log(ns[k - 1]))
        log_a.append(float(la))
    lam, mu, d, tau = closed_form_constants(gamma, cert.alpha, cert.C)
    return Construction(weight=w.name, gamma=gamma, B=cert.B, alpha=cert.alpha, C=cert.C,
                        eps=tuple(epss), n=tuple(ns), log_a=tuple(log_a),
                        lambda_=lam, mu=mu, d=d, tau=tau)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    rows: List[dict] = field(default_factory=list)
    constants_ok: bool = True
    passed: bool = True
    marginal: List[int] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    def failing(self, check):
        return [row["k"] for row in self.rows if row.get(check) is False]


def validate_sequence(c, marginal_rel=0.01):
    """Check every construction inequality for each constructed k.

    Violations of the a_k bounds within ``marginal_rel`` are flagged, not failed.
    """
    if c.K < 5:
        raise ValueError("need K >= 5")
    rep = ValidationReport()
    first = 2.0 ** (c.gamma - c.alpha) / c.C > 1
    rep.constants_ok = bool(first and c.tau > 1 and c.lambda_ > 1 and 0 < c.d < 1)
    if not rep.constants_ok:
        rep.failures.append("constants: 2^(gamma-alpha)/C=%g tau=%g lambda=%g" %
                            (2.0 ** (c.gamma - c.alpha) / c.C, c.tau, c.lambda_))
    n_a = len(c.log_a)
    log_lam, log_mu = math.log(c.lambda_) if c.lambda_ > 0 else -math.inf, math.log(c.mu)
    tol_m = math.log1p(marginal_rel)
    for k in range(1, c.K):
        row = {"k": k}
        nk, nk1 = c.n_at(k), c.n_at(k + 1)
        ratio = nk1 / nk
        row["n_ratio"] = ratio
        row["gap_strict"] = bool(ratio > c.tau)
        row["gap_floor"] = bool(ratio > c.tau - 1 / nk)
        if k <= n_a:
            la = c.log_a_at(k)
            row["log_a"] = la
            row["lambda_ok"] = la >= log_lam or la >= log_lam - tol_m
            row["mu_ok"] = la <= log_mu or la <= log_mu + tol_m
            if (la < log_lam or la > log_mu) and row["lambda_ok"] and row["mu_ok"]:
                rep.marginal.append(k)
            if k + 1 <= n_a:
                lhs = c.log_a_at(k + 1) / la
                rhs = c.d * ratio
                row["chain_lhs"] = lhs
                row["chain_rhs"] = rhs
                row["chain_ok"] = bool(lhs < rhs)
        rep.rows.append(row)
    for check in ("lambda_ok", "mu_ok", "chain_ok", "gap_floor"):
        bad = rep.failing(check)
        if bad:
            rep.failures.append("%s fails at k=%s" % (check, bad))
    rep.passed = rep.constants_ok and not rep.failures
    return rep


def delta_bound(c):
    """Largest admissible covering parameter delta."""
    return delta_from_constants(c.lambda_, c.mu, c.d)


def delta_from_constants(lam, mu, d):
    r = math.log(lam) / math.log(mu)
    return (1 - d) * r / (1 + 1 / r)


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------

def _fmt_n(n):
    man, exp = n.man_exp
    if exp <= 64:
        return str(int(man) << int(exp))
    return "%d*2^%d" % (int(man), int(exp))


def _parse_n(s):
    if "*2^" in s:
        man, exp = s.split("*2^")
        return MP.ldexp(mpf(int(man)), int(exp))
    return mpf(int(s))


def dumps(c):
    lines = [FORMAT_HEADER, "weight %s" % c.weight]
    for key in ("gamma", "B", "alpha", "C", "lambda_", "mu", "d", "tau"):
        lines.append("%s %s" % (key, float(getattr(c, key)).hex()))
    lines.append("K %d" % c.K)
    lines.append("# k eps_k n_k log_a_k")
    for k in range(1, c.K + 1):
        la = c.log_a_at(k).hex() if k <= len(c.log_a) else "-"
        lines.append("%d %s %s %s" % (k, MP.nstr(c.eps_at(k), 30, strip_zeros=False), _fmt_n(c.n_at(k)), la))
    return "\n".join(lines) + "\n"


def loads(text):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ValueError("not a construction file (expected %r)" % FORMAT_HEADER)
    head = {}
    body = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0].isdigit():
            body.append(parts)
        else:
            head[parts[0]] = parts[1]
    K = int(head["K"])
    if len(body) != K:
        raise ValueError("expected %d records, found %d" % (K, len(body)))
    eps, ns, las = [], [], []
    for i, (k, e, n, la) in enumerate(body, start=1):
        if int(k) != i:
            raise ValueError("records out of order at k=%s" % k)
        eps.append(mpf(e))
        ns.append(_parse_n(n))
        if la != "-":
            las.append(float.fromhex(la))
    consts = {key: float.fromhex(head[key]) for key in ("gamma", "B", "alpha", "C", "lambda_", "mu", "d", "tau")}
    return Construction(weight=head["weight"], eps=tuple(eps), n=tuple(ns), log_a=tuple(las), **consts)


def construct(w, cert=None, gamma=None, K=24, tol=1e-14):
    """Certify, pick gamma and build in one call."""
    from .weight import certify_doubling
    cert = certify_doubling(w) if cert is None else cert
    gamma = select_gamma(cert) if gamma is None else gamma
    return build_sequence(w, cert, gamma, K=K, tol=tol)
