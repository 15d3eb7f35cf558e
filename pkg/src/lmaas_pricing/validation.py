"""Input validation helpers.

Every check raises :class:`~lmaas_pricing.exceptions.ValidationError` with a
field path, mirroring how scikit-learn's ``check_*`` helpers fail fast on bad
input before any numerical work starts.
"""

import math
from numbers import Integral, Real

from .exceptions import ValidationError


def check_real(value, path, *, finite=True):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ValidationError(path, f"expected a real number, got {value!r}")
    value = float(value)
    if finite and not math.isfinite(value):
        raise ValidationError(path, f"must be finite, got {value!r}")
    return value


def check_integer(value, path, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ValidationError(path, f"expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError(path, f"must be >= {minimum}, got {value}")
    return value


def check_positive(value, path):
    value = check_real(value, path)
    if value <= 0:
        raise ValidationError(path, f"must be > 0, got {value!r}")
    return value


def check_nonnegative(value, path):
    value = check_real(value, path)
    if value < 0:
        raise ValidationError(path, f"must be >= 0, got {value!r}")
    return value


def check_interval(value, path, lo, hi):
    value = check_real(value, path)
    if not lo <= value <= hi:
        raise ValidationError(path, f"must lie in [{lo}, {hi}], got {value!r}")
    return value


def check_keys(mapping, allowed, path="", required=()):
    """Reject unknown keys and report missing required ones."""
    if not isinstance(mapping, dict):
        raise ValidationError(path, f"expected an object, got {type(mapping).__name__}")
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ValidationError(where, "unknown key")
    for key in required:
        if key not in mapping:
            where = f"{path}.{key}" if path else key
            raise ValidationError(where, "missing required key")


def check_instance(instance):
    """Coerce ``instance`` to a validated :class:`MarketInstance`.

    Accepts an instance, a plain dict in the JSON document layout, or a JSON
    string.
    """
    from .market import MarketInstance

    if isinstance(instance, MarketInstance):
        return instance
    if isinstance(instance, str):
        return MarketInstance.from_json(instance)
    if isinstance(instance, dict):
        return MarketInstance.from_dict(instance)
    raise ValidationError("", f"cannot interpret {type(instance).__name__} as a MarketInstance")


def check_prices(prices, instance):
    """Validate a price schedule against the models of ``instance``."""
    from .market import PriceSchedule

    if not isinstance(prices, PriceSchedule):
        raise ValidationError("prices", f"expected PriceSchedule, got {type(prices).__name__}")
    for model in instance.models:
        if prices.price(model.index) <= 0:
            raise ValidationError(
                "prices", f"price of model {model.index} must be > 0, got {prices.price(model.index)!r}"
            )
    return prices


def check_selection(selection, instance, path="selection"):
    selection = tuple(int(u) for u in selection)
    if len(selection) != instance.n_customers:
        raise ValidationError(path, f"expected {instance.n_customers} entries, got {len(selection)}")
    for n, u in enumerate(selection):
        if not 1 <= u <= instance.n_models:
            raise ValidationError(f"{path}[{n}]", f"model index must lie in 1..{instance.n_models}, got {u}")
    return selection
