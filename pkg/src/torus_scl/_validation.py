"""Input validation helpers shared by the estimators and the scenario loader."""

from fractions import Fraction
import numbers

import numpy as np

FLOAT_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid parameter; ``path`` names the offending config field."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def as_number(value, path=None):
    """Parse an int, float, Fraction or ``"p/q"`` string.

    Integers and rational strings become :class:`Fraction` so that downstream
    code can take the exact branch; floats stay floats.
    """
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, numbers.Real):
        value = float(value)
        if not np.isfinite(value):
            raise ConfigError(f"non-finite number {value!r}", path)
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(f"expected a number or 'p/q' string, got {value!r}", path)


def is_exact(values):
    return all(isinstance(v, Fraction) for v in values)


def check_positive(value, name, strict=True):
    value = as_number(value, name)
    if (value <= 0) if strict else (value < 0):
        raise ConfigError(f"must be {'positive' if strict else 'non-negative'}, got {value}", name)
    return value


def check_field(data, name="field"):
    """Return ``data`` as a finite float ndarray of dimension 1 to 3."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim < 1 or arr.ndim > 3:
        raise ConfigError(f"expected 1 to 3 array dimensions, got {arr.ndim}", name)
    if arr.size == 0:
        raise ConfigError("empty array", name)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("contains non-finite values", name)
    return arr


def check_increasing(values, name):
    values = list(values)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("must be strictly increasing", name)
    return values


def check_field_list(fields, name="fields"):
    """Validate a sequence of equally shaped fields; returns a stacked array."""
    fields = [check_field(f, f"{name}[{i}]") for i, f in enumerate(fields)]
    if not fields:
        raise ConfigError("need at least one field", name)
    shape = fields[0].shape
    for i, f in enumerate(fields):
        if f.shape != shape:
            raise ConfigError(f"shape {f.shape} differs from {shape}", f"{name}[{i}]")
    return np.stack(fields)
