import functools

import pytest

from maxprod import CATALOG, DoublingCertificate, build_sequence, construct, parse_weight
from maxprod.product import make_products

# filled by test_acceptance; echoed in the terminal summary
ACCEPTANCE_LINES = {}


@functools.lru_cache(maxsize=None)
def catalog_construction(spec, K=20):
    w = parse_weight(spec)
    return w, construct(w, K=K)


@functools.lru_cache(maxsize=None)
def pow_gamma5(K=24):
    """omega = 1/(1-r) with the exact certificate B=2 and gamma=5."""
    w = parse_weight("pow:beta=1")
    cert = DoublingCertificate.from_constant(2, w)
    return w, build_sequence(w, cert, 5, K=K)


@pytest.fixture(scope="session")
def pow5():
    return pow_gamma5()


@pytest.fixture(scope="session")
def pow5_products(pow5):
    return make_products(pow5[1])


@pytest.fixture(scope="session", params=CATALOG)
def catalog(request):
    return catalog_construction(request.param)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
