"""Doubling weights in log-domain and certification of their doubling constants.

A weight is represented through ``L = log(1/eps)`` with ``eps = 1 - r``; every
catalog weight has a closed form in ``L`` so it can be evaluated arbitrarily
close to the boundary without forming ``omega`` or ``1 - r`` in floating point.
"""

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from ._mp import MP, mpf, to_mpf

LOG2 = MP.log(2)

# Catalog weights are exact closed forms, trusted far below the double range.
DEFAULT_MAX_LOG_INV_EPS = mpf(10) ** 40

CATALOG = ("pow:beta=1", "log", "exploglog", "prod:pow:0.5,log")

SAFETY = 1 + 1e-9


class WeightError(ValueError):
    """Evaluation outside the trusted range of a weight."""


class WeightSpecError(ValueError):
    """Unparseable weight DSL string."""


class DoublingError(ValueError):
    """The weight failed doubling certification."""

    def __init__(self, message, eps=None):
        super().__init__(message)
        self.eps = eps


@dataclass(frozen=True)
class Weight:
    """A non-decreasing unbounded weight ``omega`` on [0, 1).

    ``log_of_L`` maps ``L = log(1/eps)`` (an mpf) to ``log omega(1 - eps)``.
    """

    name: str
    log_of_L: Callable
    max_log_inv_eps: object = DEFAULT_MAX_LOG_INV_EPS

    @property
    def eps_floor(self):
        return MP.exp(-self.max_log_inv_eps)

    def log_eval(self, eps):
        return eval_log_weight(self, eps)

    def log_eval_L(self, L):
        L = to_mpf(L)
        if L < 0 or L > self.max_log_inv_eps:
            raise WeightError("log(1/eps)=%s outside [0, %s] for weight %s"
                              % (MP.nstr(L, 8), MP.nstr(self.max_log_inv_eps, 8), self.name))
        return self.log_of_L(L)


def eval_log_weight(w, eps):
    """Return ``log omega(1 - eps)`` as an mpf.

    >>> float(eval_log_weight(pow_weight(1.0), 1e-6))  # doctest: +ELLIPSIS
    13.815510557964...
    """
    eps = to_mpf(eps)
    if not (eps > 0) or eps > 1:
        raise WeightError("eps=%s outside (0, 1]" % MP.nstr(eps, 8))
    L = -MP.log(eps)
    if L > w.max_log_inv_eps:
        raise WeightError("eps=%s below the trusted floor of weight %s" % (MP.nstr(eps, 8), w.name))
    return w.log_of_L(max(L, mpf(0)))


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def pow_weight(beta):
    """omega(r) = (1 - r)**(-beta)."""
    beta = float(beta)
    if not beta > 0:
        raise WeightSpecError("pow weight needs beta > 0, got %r" % beta)
    b = mpf(beta)
    return Weight("pow:beta=%s" % _num(beta), lambda L: b * L)


def log_weight():
    """omega(r) = log(e / (1 - r))."""
    return Weight("log", lambda L: MP.log1p(L))


def exploglog_weight():
    """omega(r) = exp(sqrt(log(e / (1 - r))))."""
    return Weight("exploglog", lambda L: MP.sqrt(1 + L))


def product_weight(*parts):
    if len(parts) < 2:
        raise WeightSpecError("prod needs at least two factors")
    fns = [p.log_of_L for p in parts]
    name = "prod:" + ",".join(p.name for p in parts)
    return Weight(name, lambda L: MP.fsum(f(L) for f in fns),
                  min(p.max_log_inv_eps for p in parts))


def _num(x):
    return repr(float(x)).rstrip("0").rstrip(".") if float(x) != int(x) else str(int(x))


def _parse_pow(arg):
    arg = arg.strip()
    if arg.startswith("beta="):
        arg = arg[len("beta="):]
    try:
        return pow_weight(float(arg))
    except ValueError as exc:
        raise WeightSpecError("bad pow parameter %r" % arg) from exc


def _parse_simple(item):
    item = item.strip()
    if item == "log":
        return log_weight()
    if item == "exploglog":
        return exploglog_weight()
    if item == "pow":
        return pow_weight(1.0)
    if item.startswith("pow:"):
        return _parse_pow(item[4:])
    raise WeightSpecError("unknown weight %r" % item)


def parse_weight(spec):
    """Parse the weight DSL: ``pow:beta=1``, ``log``, ``exploglog``, ``prod:pow:0.5,log``."""
    if not isinstance(spec, str) or not spec.strip():
        raise WeightSpecError("empty weight spec")
    s = spec.strip().lower()
    if s.startswith("prod:"):
        return product_weight(*[_parse_simple(p) for p in s[5:].split(",") if p.strip()])
    return _parse_simple(s)


# ---------------------------------------------------------------------------
# Doubling certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoublingCertificate:
    B: float
    alpha: float
    C: float
    probe_count: int = 0

    def __post_init__(self):
        if not self.B > 1:
            raise DoublingError("doubling constant must exceed 1, got %r" % self.B)
        if self.C < self.B ** 2 * (1 - 1e-15):
            raise DoublingError("envelope constant C=%r below B**2" % self.C)

    @classmethod
    def from_constant(cls, B, w, probe_count=0):
        """Certificate for a known doubling constant ``B`` of ``w``."""
        B = float(B)
        head = float(w.log_eval(0.5) - w.log_eval(1))
        C = max(B * math.exp(head), B * B)
        return cls(B=B, alpha=math.log2(B), C=C, probe_count=probe_count)

    @property
    def log2_C(self):
        return math.log2(self.C)


def default_probe_grid(w):
    top = min(60, int(MP.floor(w.max_log_inv_eps / LOG2)) - 1)
    return [2.0 ** -i for i in range(top + 1)]


def _log_ratio_at_L(w, L):
    return w.log_of_L(L + LOG2) - w.log_of_L(L)


def certify_doubling(w, probe_grid: Optional[Iterable] = None):
    """Certify the doubling condition ``omega(1-eps/2) <= B omega(1-eps)`` on a probe grid."""
    grid = list(default_probe_grid(w) if probe_grid is None else probe_grid)
    if not grid:
        raise ValueError("empty probe grid")
    floor2 = 2 * w.eps_floor
    worst = None
    worst_eps = None
    for e in grid:
        e = to_mpf(e)
        if e < floor2 or e > 1:
            raise WeightError("probe eps=%s outside [2*eps_floor, 1]" % MP.nstr(e, 8))
        rho = w.log_eval(e / 2) - w.log_eval(e)
        if worst is None or rho > worst:
            worst, worst_eps = rho, e
    if not worst > 0:
        raise DoublingError("weight %s is not increasing on the probe grid" % w.name)

    # ratio still climbing over the last three decades: no finite B
    e_min = min(to_mpf(e) for e in grid)
    L0 = -MP.log(e_min)
    tail = [_log_ratio_at_L(w, L0 - j * MP.log(10)) for j in (3, 2, 1, 0) if L0 - j * MP.log(10) >= 0]
    if len(tail) == 4 and all(b > a for a, b in zip(tail, tail[1:])):
        if tail[-1] - tail[0] > MP.log(mpf("1.01")):
            raise DoublingError(
                "doubling ratio of %s grows without bound; still increasing at eps=%s"
                % (w.name, MP.nstr(e_min, 6)), eps=e_min)

    B = float(MP.exp(worst)) * SAFETY
    return DoublingCertificate.from_constant(B, w, probe_count=len(grid))


def check_envelope(cert, w, r, t):
    """Growth envelope ``omega(t) <= C ((1-r)/(1-t))**alpha omega(r)`` in log form."""
    r, t = to_mpf(r), to_mpf(t)
    if r > t:
        raise ValueError("need r <= t, got r=%s t=%s" % (MP.nstr(r, 8), MP.nstr(t, 8)))
    er, et = 1 - r, 1 - t
    lhs = w.log_eval(et)
    rhs = math.log(cert.C) + cert.alpha * MP.log(er / et) + w.log_eval(er)
    return bool(lhs <= rhs)
