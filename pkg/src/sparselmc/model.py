"""Domain types for the linear model of coregionalization.

A p-variate process is built as ``v(s) = (A o M) w(s)`` where the rows of
``w`` are independent unit-variance Gaussian processes, each with its own
exponential correlation ``exp(-phi_j * d)``, ``A`` is a p x p real matrix and
``M`` a binary mask of structural zeros.  Everything in this module is cheap
(O(p^3) at most) and shared by the likelihood, simulation, prediction and
sampling code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "CorrelationFamily",
    "Locations",
    "CoregionalizationState",
    "ObservedData",
    "PriorSpec",
    "canonicalize",
    "marginal_covariance",
    "cross_covariance",
]


class CorrelationFamily(enum.Enum):
    """Isotropic correlation families indexed by one range parameter."""

    EXPONENTIAL = "exponential"

    def __call__(self, phi, d):
        phi = np.asarray(phi, dtype=float)
        d = np.asarray(d, dtype=float)
        if self is CorrelationFamily.EXPONENTIAL:
            return np.exp(-phi * d)
        raise NotImplementedError(self)  # pragma: no cover

    @classmethod
    def parse(cls, name) -> "CorrelationFamily":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown correlation family {name!r}") from None


class Locations:
    """An ordered set of ``n`` distinct points in the plane.

    Parameters
    ----------
    points : (n, 2) array_like
        Coordinates.  Duplicated points are rejected because they make every
        correlation matrix singular.
    """

    def __init__(self, points, check_distinct: bool = True):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1 and pts.size == 2:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"locations must have shape (n, 2), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("at least one location is required")
        if not np.all(np.isfinite(pts)):
            raise ValueError("locations must be finite")
        if check_distinct and pts.shape[0] > 1:
            _, first, counts = np.unique(pts, axis=0, return_index=True, return_counts=True)
            if np.any(counts > 1):
                dup = sorted(first[counts > 1])
                raise ValueError(f"duplicated locations (first occurrences at rows {dup})")
        pts.setflags(write=False)
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n

    def distances(self, other: "Locations | None" = None) -> np.ndarray:
        """Euclidean distance matrix to ``other`` (or to itself)."""
        b = self.points if other is None else other.points
        return cdist(self.points, b)

    def union(self, other: "Locations") -> "Locations":
        return Locations(np.vstack([self.points, other.points]))

    @classmethod
    def uniform(cls, n: int, rng) -> "Locations":
        """``n`` points drawn uniformly on the unit square."""
        return cls(rng.uniform(size=(n, 2)))

    @classmethod
    def grid(cls, nx: int, ny: int | None = None) -> "Locations":
        """Regular ``nx`` x ``ny`` grid of cell centres on the unit square."""
        ny = nx if ny is None else ny
        gx = (np.arange(nx) + 0.5) / nx
        gy = (np.arange(ny) + 0.5) / ny
        xx, yy = np.meshgrid(gx, gy, indexing="xy")
        return cls(np.column_stack([xx.ravel(), yy.ravel()]))

    def __repr__(self) -> str:
        return f"Locations(n={self.n})"


class CoregionalizationState:
    """The coregionalization matrix ``A``, its mask and derived quantities.

    The effective matrix is ``A o M``.  Its inverse (whose rows are the
    ``a_j^{-1}`` of the matrix-form density) and ``log|det|`` are computed once
    at construction; instances are treated as immutable, and every mutation
    goes through :meth:`with_entry` which returns a fresh, consistent state.

    Raises
    ------
    ValueError
        If the shapes disagree or ``A o M`` is numerically singular.
    """

    __slots__ = ("a", "mask", "effective", "inv", "logabsdet")

    def __init__(self, a, mask=None):
        a = np.array(a, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got shape {a.shape}")
        if mask is None:
            mask = np.ones(a.shape, dtype=bool)
        mask = np.array(mask, dtype=bool)
        if mask.shape != a.shape:
            raise ValueError(f"mask shape {mask.shape} does not match A {a.shape}")
        # masked cells carry no value
        a = np.where(mask, a, 0.0)
        sign, logabsdet = np.linalg.slogdet(a)
        if sign == 0 or not np.isfinite(logabsdet):
            raise ValueError("A o M is singular")
        inv = np.linalg.inv(a)
        if not np.all(np.isfinite(inv)):
            raise ValueError("A o M is numerically singular")
        for arr in (a, mask, inv):
            arr.setflags(write=False)
        self.a = a
        self.mask = mask
        self.effective = a
        self.inv = inv
        self.logabsdet = float(logabsdet)

    @property
    def p(self) -> int:
        return self.a.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.mask.sum())

    def with_entry(self, i: int, j: int, value: float, active: bool = True):
        a = self.a.copy()
        mask = self.mask.copy()
        mask[i, j] = active
        a[i, j] = value if active else 0.0
        return CoregionalizationState(a, mask)

    def with_a(self, a) -> "CoregionalizationState":
        return CoregionalizationState(a, self.mask)

    def __repr__(self) -> str:
        return f"CoregionalizationState(p={self.p}, nnz={self.nnz})"

    @classmethod
    def identity(cls, p: int, scale: float = 1.0) -> "CoregionalizationState":
        return cls(scale * np.eye(p), np.eye(p, dtype=bool))


@dataclass(frozen=True)
class ObservedData:
    """Responses ``y`` (p x n) and availability ``avail`` (1 = observed).

    Unavailable cells hold an arbitrary placeholder; no computation in the
    package reads them.
    """

    y: np.ndarray
    avail: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        if y.ndim == 1:
            y = y[None, :]
        avail = np.ones(y.shape, dtype=bool) if self.avail is None else np.array(self.avail, dtype=bool)
        if avail.shape != y.shape:
            raise ValueError(f"avail shape {avail.shape} does not match y {y.shape}")
        if not np.all(np.isfinite(y[avail])):
            raise ValueError("available responses must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "avail", avail)

    @property
    def p(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.y.shape[1]

    def filled(self, value: float = 0.0) -> np.ndarray:
        """Copy of ``y`` with unavailable cells replaced by ``value``."""
        return np.where(self.avail, self.y, value)

    def row_means(self) -> np.ndarray:
        cnt = self.avail.sum(axis=1)
        tot = self.filled().sum(axis=1)
        return np.where(cnt > 0, tot / np.maximum(cnt, 1), 0.0)

    @classmethod
    def complete(cls, y) -> "ObservedData":
        y = np.asarray(y, dtype=float)
        return cls(y, np.ones(np.atleast_2d(y).shape, dtype=bool))


@dataclass(frozen=True)
class PriorSpec:
    """Prior hyperparameters.

    ``a_sd`` is the standard deviation of the independent normal priors on the
    entries of ``A``; ranges are uniform on ``[phi_min, phi_max]``; noise
    variances inverse gamma with ``tau_shape``/``tau_scale``; means normal with
    variance ``mu_var``; ``pi_sparsity`` is the prior inclusion probability of
    each mask cell (``None`` means ``1/p``).
    """

    a_sd: float = 1.0
    phi_min: float = 3.0
    phi_max: float = 30.0
    tau_shape: float = 1.0
    tau_scale: float = 1.0
    mu_var: float = 10.0
    pi_sparsity: float | None = None

    def __post_init__(self):
        for name in ("a_sd", "phi_min", "phi_max", "tau_shape", "tau_scale", "mu_var"):
            if not getattr(self, name) > 0:
                raise ValueError(f"prior.{name} must be positive")
        if not self.phi_min < self.phi_max:
            raise ValueError("prior.phi_min must be below prior.phi_max")
        if self.pi_sparsity is not None and not 0.0 <= self.pi_sparsity <= 1.0:
            raise ValueError("prior.pi_sparsity must lie in [0, 1]")

    def pi(self, p: int) -> float:
        return 1.0 / p if self.pi_sparsity is None else float(self.pi_sparsity)


def canonicalize(state: CoregionalizationState, phi):
    """Pick a canonical representative of the (A, phi) equivalence class.

    Columns are sorted by ascending range (stable, so ties keep their original
    order) and each column is flipped so that its largest-magnitude entry is
    positive.  Neither operation changes the implied distribution; the
    function is meant for summaries only.

    Returns
    -------
    state : CoregionalizationState
    phi : ndarray
    """
    phi = np.asarray(phi, dtype=float)
    order = np.argsort(phi, kind="stable")
    a = state.a[:, order]
    mask = state.mask[:, order]
    idx = np.argmax(np.abs(a), axis=0)
    signs = np.where(a[idx, np.arange(a.shape[1])] < 0, -1.0, 1.0)
    return CoregionalizationState(a * signs, mask), phi[order].copy()


def marginal_covariance(state: CoregionalizationState) -> np.ndarray:
    """Covariance of ``v(s)`` at a single location, ``(A o M)(A o M)^T``."""
    a = state.effective
    return a @ a.T


def cross_covariance(state: CoregionalizationState, phi, d: float,
                     family: CorrelationFamily = CorrelationFamily.EXPONENTIAL) -> np.ndarray:
    """Cross-covariance ``C_ij(d) = sum_k a_ik a_jk rho(phi_k, d)``."""
    if d < 0:
        raise ValueError("distance must be non-negative")
    a = state.effective
    rho = family(np.asarray(phi, dtype=float), d)
    return (a * rho) @ a.T
