"""Shared multiprecision context and small numeric helpers.

All quantities that may leave the double range (complement radii near the
boundary, the exponents n_k, log-radius interval endpoints) live in a private
mpmath context so that the global ``mpmath.mp`` precision is never touched.
"""

import math

import mpmath

PREC = 256

MP = mpmath.MPContext()
MP.prec = PREC

mpf = MP.mpf

# |log a - n*ell| below this (relative to max(1, log a)) is treated as an exact
# zero circle. 2**-128 sits far below double resolution and far above the
# rounding noise of the 256-bit context.
ZERO_SNAP = MP.mpf(2) ** -128


def to_mpf(x):
    """Convert ints, floats, decimal strings or mpf values into the context."""
    if isinstance(x, str):
        return MP.mpf(x.strip())
    return MP.mpf(x)


def is_int_valued(n):
    n = MP.mpf(n)
    return MP.isint(n)


def int_mod(n, q):
    """Exact ``n mod q`` for an integer-valued mpf or Python int.

    Integer-valued mpf values are stored as ``man * 2**exp`` with ``exp >= 0``,
    so the residue is reduced without ever expanding the full integer.
    """
    if isinstance(n, int):
        return n % q
    man, exp = MP.mpf(n).man_exp
    man = int(man)
    if exp < 0:
        raise ValueError("not an integer: %s" % MP.nstr(n, 20))
    return (man % q) * pow(2, int(exp), q) % q


def as_int(n, max_bits=1 << 20):
    """Expand an integer-valued mpf into a Python int (guarded against huge values)."""
    if isinstance(n, int):
        return n
    man, exp = MP.mpf(n).man_exp
    if exp < 0:
        raise ValueError("not an integer: %s" % MP.nstr(n, 20))
    if int(man).bit_length() + exp > max_bits:
        raise OverflowError("integer with %d bits is too large to expand" % (int(man).bit_length() + exp))
    return int(man) << int(exp)


def fmt(x, digits=17):
    """Fixed significant-digit text for floats and mpf values."""
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return repr(x)
        return format(x, ".%dg" % digits)
    x = MP.mpf(x)
    if MP.isinf(x) or MP.isnan(x):
        return str(float(x))
    return MP.nstr(x, digits, min_fixed=-4, max_fixed=digits)


def is_prime(q):
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def quad_nodes(q):
    """Node count used for a nominal grid size ``q``: the smallest prime >= q.

    Exponents n_k are frequently divisible by large powers of two; a prime node
    count keeps every n_k coprime to the grid so z**n_k never aliases onto a
    single angle.
    """
    q = max(int(q), 2)
    while not is_prime(q):
        q += 1
    return q
