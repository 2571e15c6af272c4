"""Evaluation of the products f_j(z) = prod_k (1 + a z**n) / (1 + z**n / a).

Points are given as a complement radius ``eps = 1 - |z|`` (mpf, any size) and a
rational angle ``2*pi*num/den``. For each factor the exponent enters only
through ``x = log a - n*ell`` (``ell = -log|z|``, computed in the 256-bit
context) and through the exact residue ``n*num mod den``, so neither huge
``n`` nor radii next to the boundary lose accuracy.
"""

import math
from dataclasses import dataclass
from math import gcd

import numpy as np

from ._mp import MP, ZERO_SNAP, as_int, int_mod, mpf, to_mpf

DEFAULT_TOL = 1e-13
# u = a*|z|**n below exp(-UNDERFLOW) contributes nothing representable
UNDERFLOW = 745.0


class TruncationError(ValueError):
    """The constructed factors do not reach the requested radius."""

    def __init__(self, message, min_eps=None):
        super().__init__(message)
        self.min_eps = min_eps


@dataclass(frozen=True)
class Product:
    parity: int
    factors: tuple  # ((log_a, n), ...) with log_a a float and n an integer-valued mpf
    mu: float
    tau: float = math.inf  # inf: the factor list is the complete (finite) product

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        for i, (la, n) in enumerate(self.factors):
            if la < 0:
                raise ValueError("factor %d has a < 1" % i)
            if i and not n > self.factors[i - 1][1]:
                raise ValueError("exponents must be strictly increasing")

    @property
    def n_last(self):
        return self.factors[-1][1]


def make_product(c, j):
    """f_j from a construction: factors with indices 2k + j, k = 1, 2, ..."""
    factors = []
    k = 1
    while 2 * k + j <= len(c.log_a):
        m = 2 * k + j
        factors.append((c.log_a_at(m), c.n_at(m)))
        k += 1
    if not factors:
        raise ValueError("construction too short for f_%d" % j)
    return Product(parity=j, factors=tuple(factors), mu=c.mu, tau=c.tau)


def make_products(c):
    return make_product(c, 0), make_product(c, 1)


@dataclass(frozen=True)
class DiscPoint:
    eps: object
    angle_num: int = 0
    angle_den: int = 1

    def __post_init__(self):
        eps = to_mpf(self.eps)
        if not (0 < eps <= 1):
            raise ValueError("eps must lie in (0, 1], got %s" % MP.nstr(eps, 8))
        num, den = int(self.angle_num), int(self.angle_den)
        if den <= 0:
            raise ValueError("angle_den must be positive")
        num %= den
        g = gcd(num, den) or 1
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "angle_num", num // g)
        object.__setattr__(self, "angle_den", den // g)

    @property
    def ell(self):
        return ell_of(self.eps)


def ell_of(eps):
    """-log(1 - eps) in the 256-bit context."""
    return -MP.log1p(-to_mpf(eps))


def eps_of_ell(ell):
    return -MP.expm1(-to_mpf(ell))


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------

# exp(-x) for x beyond this is zero at every tolerance we accept; the cut also
# keeps mpmath from materializing numbers like exp(-1e24)
NEGLIGIBLE = mpf(10) ** 6


def _exp_neg(x):
    return mpf(0) if x > NEGLIGIBLE else MP.exp(-x)


def _beyond_tail(p, ell):
    """Bound on sum of |z|**n over the factors that were never constructed."""
    if p.tau == math.inf:
        return mpf(0)
    nl = p.n_last * ell
    q = _exp_neg((p.tau - 1) * nl)
    if q >= 1:
        return MP.inf
    return _exp_neg(nl) * q / (1 - q)


def _min_eps_for(p, tol):
    """Smallest eps at which the constructed factors still certify ``tol``."""
    if p.tau == math.inf:
        return mpf(0)
    lo, hi = mpf(-80), mpf(80)  # bisection on log(n_last * ell)
    for _ in range(200):
        mid = (lo + hi) / 2
        if (1 + p.mu) * _beyond_tail(p, MP.exp(mid) / p.n_last) < tol:
            hi = mid
        else:
            lo = mid
    return eps_of_ell(MP.exp(hi) / p.n_last)


def truncation_index(p, eps, tol=DEFAULT_TOL):
    """Number of leading factors needed at radius 1 - eps, and the log error bound of the rest."""
    if not 0 < tol < 0.5:
        raise ValueError("tol must lie in (0, 1/2)")
    ell = ell_of(eps)
    beyond = _beyond_tail(p, ell)
    if (1 + p.mu) * beyond >= tol:
        m = _min_eps_for(p, tol)
        raise TruncationError(
            "insufficient construction depth: eps=%s needs more factors; minimum eps for tol=%g is %s"
            % (MP.nstr(to_mpf(eps), 6), tol, MP.nstr(m, 6)), min_eps=m)
    terms = [_exp_neg(n * ell) for _, n in p.factors]
    tail = beyond
    K_used = len(terms)
    while K_used > 0 and (1 + p.mu) * (tail + terms[K_used - 1]) < tol:
        tail += terms[K_used - 1]
        K_used -= 1
    S = (1 + p.mu) * tail
    return K_used, float(S / (1 - S))


# ---------------------------------------------------------------------------
# Factor kernels
# ---------------------------------------------------------------------------

def _exponent(la, n, ell):
    """x = log a - n*ell, with exact zero circles snapped to 0."""
    x = mpf(la) - n * ell
    if abs(x) <= ZERO_SNAP * max(1, abs(la)):
        return 0.0
    return float(x)


def _angle_parts(s, den):
    """Trig data of phi = 2*pi*s/den for signed residues s in (-den/2, den/2]."""
    s = np.asarray(s)
    if s.dtype == object:
        # big-integer residues: int/int true division rounds correctly
        vals = [int(v) for v in s.tolist()]
        frac = np.array([v / den for v in vals])
        hc = np.array([(den - 2 * abs(v)) / (2 * den) for v in vals])
        half = np.array([2 * abs(v) == den for v in vals], dtype=bool)
    else:
        frac = s / den
        hc = (den - 2 * np.abs(s)) / (2 * den)
        half = 2 * np.abs(s) == den
    cphi = np.cos(2 * np.pi * frac)
    sphi = np.sin(2 * np.pi * frac)
    chalf = np.sin(np.pi * hc)  # cos(phi/2), accurate near phi = pi
    cphi[half] = -1.0
    sphi[half] = 0.0
    chalf[half] = 0.0
    return cphi, sphi, chalf


def _log_abs_one_plus(x, cphi, chalf):
    # |1 + u e^{i phi}|^2 = (1-u)^2 + 4u cos^2(phi/2), u = e^x: a sum of non-negative terms
    u = math.exp(x)
    em = math.expm1(x)
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(em * em + 4.0 * u * chalf * chalf)


def _factor(x, la, cphi, sphi, chalf, want_arg):
    lm = _log_abs_one_plus(x, cphi, chalf) - _log_abs_one_plus(x - 2 * la, cphi, chalf)
    if not want_arg:
        return lm, None
    u = math.exp(x)
    v = math.exp(x - 2 * la)
    arg = np.arctan2(u * sphi, 1 + u * cphi) - np.arctan2(v * sphi, 1 + v * cphi)
    return lm, arg


def _signed(res, den):
    res = np.asarray(res)
    return np.where(2 * res > den, res - den, res)


def _evaluate(p, ell, K_used, residue_fn, den, size, want_arg):
    logmod = np.zeros(size)
    arg = np.zeros(size) if want_arg else None
    for la, n in p.factors[:K_used]:
        x = _exponent(la, n, ell)
        if x < -UNDERFLOW:
            continue
        s = _signed(residue_fn(n), den)
        cphi, sphi, chalf = _angle_parts(s, den)
        lm, ar = _factor(x, la, cphi, sphi, chalf, want_arg)
        logmod += lm
        if want_arg:
            arg += ar
    return logmod, arg


def _point_arrays(p, z, tol, want_arg):
    K_used, _ = truncation_index(p, z.eps, tol)
    den = z.angle_den
    fn = lambda n: np.array([int_mod(n, den) * z.angle_num % den], dtype=object if den > 2 ** 31 else np.int64)
    return _evaluate(p, z.ell, K_used, fn, den, 1, want_arg)


def log_modulus(p, z, tol=DEFAULT_TOL):
    """log|f_j(z)|; -inf exactly at the zeros."""
    lm, _ = _point_arrays(p, z, tol, False)
    return float(lm[0])


def eval(p, z, tol=DEFAULT_TOL):
    """f_j(z) as a complex number."""
    lm, arg = _point_arrays(p, z, tol, True)
    if lm[0] == -np.inf:
        return 0j
    return complex(math.exp(lm[0]) * complex(math.cos(arg[0]), math.sin(arg[0])))


def circle_values(p, eps, q, tol=DEFAULT_TOL, want_arg=False):
    """log|f| (and arg f) at the q angles 2*pi*i/q, i = 0..q-1, on |z| = 1 - eps."""
    q = int(q)
    if q > 2 ** 31:
        raise ValueError("q too large for vectorized evaluation")
    K_used, _ = truncation_index(p, eps, tol)
    idx = np.arange(q, dtype=np.int64)
    fn = lambda n: (int_mod(n, q) * idx) % q
    return _evaluate(p, ell_of(eps), K_used, fn, q, q, want_arg)


def circle_values_at_ell(p, ell, q, tol=DEFAULT_TOL, want_arg=False):
    return circle_values(p, eps_of_ell(ell), q, tol, want_arg)


def values_at(p, eps, nums, den, tol=DEFAULT_TOL, want_arg=False):
    """log|f| (and arg f) at the angles 2*pi*nums/den on |z| = 1 - eps."""
    den = int(den)
    if den <= 0:
        raise ValueError("den must be positive")
    K_used, _ = truncation_index(p, eps, tol)
    small = den < 2 ** 31
    nums = np.array([int(v) % den for v in nums], dtype=np.int64 if small else object)
    fn = lambda n: (int_mod(n, den) * nums) % den
    return _evaluate(p, ell_of(eps), K_used, fn, den, len(nums), want_arg)


# ---------------------------------------------------------------------------
# Zeros
# ---------------------------------------------------------------------------

def zeros_up_to(p, r=None, eps=None):
    """Zero circles (s_m, n_m) with s_m <= r; give either the radius ``r`` or ``eps = 1 - r``."""
    if (r is None) == (eps is None):
        raise ValueError("give exactly one of r, eps")
    ell = ell_of(eps) if eps is not None else -MP.log(to_mpf(r))
    out = []
    for la, n in p.factors:
        if la <= 0:
            continue
        ell_s = mpf(la) / n
        if ell_s >= ell:
            out.append((MP.exp(-ell_s), n))
    return out


def zero_point(p, m, l=0):
    """DiscPoint at the l-th zero on the m-th zero circle (1-based m) of ``p``."""
    la, n = p.factors[m - 1]
    nn = as_int(n)
    return DiscPoint(eps_of_ell(mpf(la) / n), 2 * l + 1, 2 * nn)
