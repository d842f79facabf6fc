"""Input validation helpers shared by the estimator and the CLI."""
from __future__ import annotations

import numbers

import numpy as np

from .hermite import HermiteSeries, TruncationConfig, WeightSpec


def check_coefficients(X, n_features: int | None = None, name: str = "X") -> np.ndarray:
    """
    Coerce coefficient input to a finite complex array of shape (n_samples, n_features).

    sklearn's ``check_array`` rejects complex data, hence this helper.  A 1-d
    input is treated as a single sample.
    """
    if isinstance(X, HermiteSeries):
        X = X.coeffs
    X = np.asarray(X)
    if X.dtype.kind not in "biufc":
        raise ValueError(f"{name} must be numeric, got dtype {X.dtype}")
    X = X.astype(complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 1-d or 2-d, got {X.ndim} dimensions")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinity")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"{name} has {X.shape[1]} coefficients per sample, expected {n_features}"
        )
    return X


def check_polynomial(coefficients) -> tuple:
    if isinstance(coefficients, (numbers.Number, np.number)):
        coefficients = (coefficients,)
    coeffs = tuple(complex(a) for a in coefficients)
    if not coeffs:
        raise ValueError("coefficients must hold a_0 .. a_{m-1} with m >= 1")
    if not all(np.isfinite(a.real) and np.isfinite(a.imag) for a in coeffs):
        raise ValueError("coefficients must be finite")
    return coeffs


def check_weight(lam, center, dim: int) -> WeightSpec:
    if not isinstance(lam, (numbers.Real, np.floating)) or not lam > 0:
        raise ValueError(f"lam must be a positive real number, got {lam!r}")
    weight = WeightSpec(float(lam), None if center is None else tuple(center))
    weight.center_array(dim)
    return weight


def check_series(f, config: TruncationConfig, weight: WeightSpec) -> HermiteSeries:
    """Accept a HermiteSeries or a raw coefficient vector sized for ``config``."""
    if isinstance(f, HermiteSeries):
        if f.weight != weight:
            raise ValueError("series weight differs from the estimator's weight")
        if f.config.dim != config.dim:
            raise ValueError(f"series has dimension {f.config.dim}, expected {config.dim}")
        return f.resize(config)
    coeffs = check_coefficients(f, config.size, name="f")
    if coeffs.shape[0] != 1:
        raise ValueError("expected a single coefficient vector")
    return HermiteSeries(config, coeffs[0], weight)
