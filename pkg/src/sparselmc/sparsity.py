"""Structural zeros in the coregionalization matrix.

A binary mask ``M`` is admissible when ``det(A o M)`` is non-zero with
probability one under any continuous law on the entries of ``A``.  Since
every term of a Laplace expansion carries a distinct free variable, the
determinant vanishes identically iff every cofactor paired with a non-zero
cell of the expansion row (or column) vanishes identically, which gives a
short recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import CoregionalizationState

__all__ = [
    "is_admissible",
    "parse_mask",
    "format_mask",
    "mask_log_prior",
    "RJProposal",
    "propose_rj",
    "independence_indicator",
    "independence_matrix",
]


def _as_mask(m) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"mask must be square, got shape {m.shape}")
    if m.size and not np.all((m == 0) | (m == 1)):
        raise ValueError("mask entries must be 0 or 1")
    return m.astype(bool)


def _key(m: np.ndarray):
    return m.shape[0], np.packbits(m, axis=None).tobytes()


@lru_cache(maxsize=1 << 17)
def _admissible_cached(key) -> bool:
    p, packed = key
    bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8), count=p * p)
    return _admissible(bits.reshape(p, p).astype(bool))


def _admissible(m: np.ndarray) -> bool:
    k = m.shape[0]
    if k == 0:
        return True
    row_nnz = m.sum(axis=1)
    col_nnz = m.sum(axis=0)
    if np.any(row_nnz == 0) or np.any(col_nnz == 0):
        return False
    if k * k - row_nnz.sum() < k:
        return True
    # expand along the line with the most zeros
    r = int(np.argmin(row_nnz))
    c = int(np.argmin(col_nnz))
    if row_nnz[r] <= col_nnz[c]:
        for j in np.flatnonzero(m[r]):
            minor = np.delete(np.delete(m, r, axis=0), j, axis=1)
            if _admissible_cached(_key(minor)):
                return True
    else:
        for i in np.flatnonzero(m[:, c]):
            minor = np.delete(np.delete(m, i, axis=0), c, axis=1)
            if _admissible_cached(_key(minor)):
                return True
    return False


def is_admissible(m) -> bool:
    """True iff ``A o m`` is almost surely non-singular.

    Results are memoised on the mask's bit pattern.

    Examples
    --------
    >>> is_admissible([[1, 1], [1, 0]])
    True
    >>> is_admissible([[1, 0], [1, 0]])
    False
    """
    return _admissible_cached(_key(_as_mask(m)))


def parse_mask(text: str) -> np.ndarray:
    """Parse ``"110;011;111"`` style text (rows separated by ``;``)."""
    rows = [r.strip() for r in str(text).strip().split(";")]
    if not rows or any(not r for r in rows):
        raise ValueError(f"malformed mask text {text!r}")
    p = len(rows)
    for r in rows:
        if len(r) != p or set(r) - {"0", "1"}:
            raise ValueError(
                f"malformed mask text {text!r}: expected {p} rows of {p} '0'/'1' characters")
    return np.array([[c == "1" for c in r] for r in rows], dtype=bool)


def format_mask(m) -> str:
    m = _as_mask(m)
    return ";".join("".join("1" if x else "0" for x in row) for row in m)


def mask_log_prior(m, pi: float) -> float:
    """Unnormalised log prior ``k log(pi) + (p^2 - k) log(1 - pi)``, k = #ones."""
    m = _as_mask(m)
    k = int(m.sum())
    z = m.size - k
    out = 0.0
    if k:
        out += -np.inf if pi <= 0 else k * np.log(pi)
    if z:
        out += -np.inf if pi >= 1 else z * np.log1p(-pi)
    return float(out)


@dataclass(frozen=True)
class RJProposal:
    """One birth/death move on a mask cell.

    ``state`` is ``None`` when the move leads to an inadmissible mask and
    must be rejected outright.  ``log_adjust`` is the log mask-prior ratio;
    the likelihood ratio is added by the caller.
    """

    state: CoregionalizationState | None
    log_adjust: float
    cell: tuple[int, int]
    birth: bool

    @property
    def auto_reject(self) -> bool:
        return self.state is None


def _log_odds(pi: float) -> float:
    if pi <= 0:
        return -np.inf
    if pi >= 1:
        return np.inf
    return float(np.log(pi) - np.log1p(-pi))


def propose_rj(state: CoregionalizationState, pi: float, a_sd: float, rng) -> RJProposal:
    """Draw a birth or death move on a uniformly chosen cell.

    A birth draws the new entry from its N(0, a_sd^2) prior, so the prior and
    proposal densities of that entry cancel and only the mask-prior ratio
    remains.  Cell selection is uniform over all p^2 cells in both
    directions, so it does not enter the ratio either.

    RNG use: one integer draw, plus one normal draw for births.
    """
    p = state.p
    cell = int(rng.integers(p * p))
    i, j = divmod(cell, p)
    if state.mask[i, j]:
        mask = state.mask.copy()
        mask[i, j] = False
        if not is_admissible(mask):
            return RJProposal(None, -np.inf, (i, j), birth=False)
        try:
            new = state.with_entry(i, j, 0.0, active=False)
        except ValueError:  # admissible pattern, but these values are singular
            return RJProposal(None, -np.inf, (i, j), birth=False)
        return RJProposal(new, -_log_odds(pi), (i, j), False)
    value = a_sd * rng.standard_normal()
    try:
        new = state.with_entry(i, j, value, active=True)
    except ValueError:
        return RJProposal(None, -np.inf, (i, j), birth=True)
    return RJProposal(new, _log_odds(pi), (i, j), birth=True)


def independence_indicator(m, i: int, j: int) -> bool:
    """True iff processes i and j are independent, i.e. rows i, j of ``m``
    have disjoint support."""
    if i == j:
        raise ValueError("independence is defined for distinct components only")
    m = _as_mask(m)
    return not bool(np.any(m[i] & m[j]))


def independence_matrix(m) -> np.ndarray:
    """Symmetric boolean matrix of pairwise independence (diagonal False)."""
    m = _as_mask(m).astype(int)
    out = (m @ m.T) == 0
    np.fill_diagonal(out, False)
    return out
