"""State-space model description, filter state and per-step report."""

from dataclasses import MISSING, dataclass, field, fields

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import as_square, check_symmetric, sym_sqrt_inv, symmetrize


@dataclass(frozen=True)
class StateSpaceSpec:
    """y_t = B x_t + eps_t,  x_t = C x_{t-1} + w_t.

    Evolution is either a fixed covariance ``w`` or per-state ``discounts``
    in (0, 1].  ``v`` is a known observation covariance (Kalman baseline) and
    ``z`` the scale-free observation covariance of the SOP filter.
    """

    b: np.ndarray
    c: np.ndarray
    w: np.ndarray | None = None
    discounts: np.ndarray | None = None
    v: np.ndarray | None = None
    z: np.ndarray | None = None

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        c = as_square(self.c, "C")
        if b.shape[1] != c.shape[0]:
            raise DimensionError(f"B is {b.shape}, C is {c.shape}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if (self.w is None) == (self.discounts is None):
            raise DomainError("give exactly one of a fixed W or discount factors")
        if self.w is not None:
            w = check_symmetric(self.w, "W", rtol=1e-9)
            if w.shape != c.shape:
                raise DimensionError(f"W is {w.shape}, state dimension is {c.shape[0]}")
            if np.linalg.eigvalsh(w)[0] < -1e-10 * max(np.abs(w).max(), 1.0):
                raise DomainError("W must be positive semi-definite")
            object.__setattr__(self, "w", w)
        else:
            d = np.atleast_1d(np.asarray(self.discounts, dtype=float)).ravel()
            if d.size != c.shape[0]:
                raise DimensionError(f"need {c.shape[0]} discount factors, got {d.size}")
            if np.any(d <= 0) or np.any(d > 1):
                raise DomainError(f"discount out of (0,1]: {d.tolist()}")
            object.__setattr__(self, "discounts", d)
        p = b.shape[0]
        for name in ("v", "z"):
            val = getattr(self, name)
            if val is not None:
                val = check_symmetric(val, name.upper(), rtol=1e-9)
                if val.shape != (p, p):
                    raise DimensionError(f"{name.upper()} must be {p}x{p}")
                object.__setattr__(self, name, val)

    @property
    def p(self):
        return self.b.shape[0]

    @property
    def m(self):
        return self.c.shape[0]

    def discount_w(self, p_prev):
        """The evolution covariance implied by the discount factors."""
        g = symmetrize(self.c @ p_prev @ self.c.T)
        s = 1.0 / np.sqrt(self.discounts)
        return symmetrize(s[:, None] * g * s[None, :] - g)


@dataclass(frozen=True)
class FilterState:
    m: np.ndarray
    p_mat: np.ndarray
    var_belief: object = None
    t: int = 0

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.m, dtype=float)).ravel()
        p_mat = as_square(self.p_mat, "P")
        if p_mat.shape != (m.size, m.size):
            raise DimensionError(f"P is {p_mat.shape}, state has length {m.size}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p_mat", p_mat)


@dataclass(frozen=True)
class StepReport:
    f: np.ndarray
    q: np.ndarray
    e: np.ndarray
    e_std: np.ndarray
    v_hat: np.ndarray | None
    m: np.ndarray
    p_mat: np.ndarray
    x_cov: np.ndarray | None = None
    tau: float | None = None
    projected: bool = False
    extra: dict = field(default_factory=dict)


def unchecked(cls, **values):
    """Build a frozen dataclass without running its validation.

    For hot loops whose inputs were produced by already-validated code.
    """
    obj = object.__new__(cls)
    for f in fields(cls):
        if f.name in values:
            val = values[f.name]
        elif f.default is not MISSING:
            val = f.default
        else:
            val = f.default_factory()
        object.__setattr__(obj, f.name, val)
    return obj


def evolve_cov(state, spec):
    """Prior state covariance R_t for the next step."""
    g = symmetrize(spec.c @ state.p_mat @ spec.c.T)
    if spec.w is not None:
        return symmetrize(g + spec.w)
    s = 1.0 / np.sqrt(spec.discounts)
    return symmetrize(s[:, None] * g * s[None, :])


def standardized_error(e, q):
    """Q^{-1/2} e with the symmetric square root."""
    e = np.atleast_1d(np.asarray(e, dtype=float))
    return sym_sqrt_inv(q) @ e
