"""Jointly maximal analytic products for doubling weights on the unit disc."""

from .analysis import (GridSpec, QuadratureError, RatioReport, VerifyResult, characteristic, circle_mean,
                       counting_bound_check, counting_function, integrated_counting, jensen_check, max_modulus,
                       verify_theorem)
from .construction import (Construction, ConstructionError, build_sequence, construct, delta_bound, dumps, loads,
                           select_gamma, validate_sequence)
from .intervals import Interval, covering_check, interval, lower_density_estimate
from .product import DiscPoint, Product, TruncationError, eval, log_modulus, make_product, make_products, zeros_up_to
from .weight import (CATALOG, DoublingCertificate, DoublingError, Weight, WeightError, WeightSpecError,
                     certify_doubling, eval_log_weight, parse_weight)

__version__ = "0.1.0"
