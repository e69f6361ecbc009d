"""Link functions for the scale, dispersion, and zero-probability submodels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special as sc


@dataclass(frozen=True)
class LinkFunction:
    """Strictly monotone, twice differentiable map parameter -> linear predictor.

    ``inverse`` returns NaN where the predictor lies outside the link's range,
    so callers can reject invalid evaluations instead of crashing.
    """

    tag: str
    apply: Callable = field(repr=False)
    inverse: Callable = field(repr=False)
    deriv: Callable = field(repr=False)  # d'(x) on the parameter scale


def _identity_inverse(eta):
    eta = np.asarray(eta, dtype=float)
    return np.where(eta > 0.0, eta, np.nan)


def _sqrt_inverse(eta):
    eta = np.asarray(eta, dtype=float)
    return np.where(eta > 0.0, eta ** 2, np.nan)


def _cloglog(x):
    return np.log(-np.log1p(-np.asarray(x, dtype=float)))


def _cloglog_inverse(eta):
    return -np.expm1(-np.exp(np.asarray(eta, dtype=float)))


def _cloglog_deriv(x):
    x = np.asarray(x, dtype=float)
    return -1.0 / ((1.0 - x) * np.log1p(-x))


LOG = LinkFunction("log", np.log, np.exp, lambda x: 1.0 / np.asarray(x, dtype=float))
IDENTITY = LinkFunction("identity", lambda x: np.asarray(x, dtype=float),
                        _identity_inverse, lambda x: np.ones_like(np.asarray(x, dtype=float)))
SQRT = LinkFunction("sqrt", np.sqrt, _sqrt_inverse,
                    lambda x: 0.5 / np.sqrt(np.asarray(x, dtype=float)))
LOGIT = LinkFunction("logit", sc.logit, sc.expit,
                     lambda x: 1.0 / (np.asarray(x) * (1.0 - np.asarray(x))))
PROBIT = LinkFunction("probit", sc.ndtri, sc.ndtr,
                      lambda x: np.sqrt(2.0 * np.pi) * np.exp(0.5 * sc.ndtri(x) ** 2))
CLOGLOG = LinkFunction("cloglog", _cloglog, _cloglog_inverse, _cloglog_deriv)

POSITIVE_LINKS = {"log": LOG, "identity": IDENTITY, "sqrt": SQRT}
PROBABILITY_LINKS = {"logit": LOGIT, "probit": PROBIT, "cloglog": CLOGLOG}


def positive_link(tag: str) -> LinkFunction:
    """Link for mu or sigma submodels."""
    try:
        return POSITIVE_LINKS[tag]
    except KeyError:
        raise ValueError(f"unknown link {tag!r} for a positive parameter; "
                         f"choose one of {sorted(POSITIVE_LINKS)}") from None


def probability_link(tag: str) -> LinkFunction:
    """Link for the zero-probability submodel."""
    try:
        return PROBABILITY_LINKS[tag]
    except KeyError:
        raise ValueError(f"unknown link {tag!r} for a probability parameter; "
                         f"choose one of {sorted(PROBABILITY_LINKS)}") from None
