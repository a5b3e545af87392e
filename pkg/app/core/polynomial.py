"""Monomial feature expansion and the least-squares solve behind every fitted model."""
from __future__ import annotations

import math
from collections.abc import Sequence
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import NamedTuple

import numpy as np
import scipy.linalg
from loguru import logger
from numpy.typing import ArrayLike, NDArray

from app.core.errors import DataValidationError, RankDeficientError


def monomial_count(n: int, degree: int) -> int:
    return math.comb(n + degree, degree)


@lru_cache(maxsize=64)
def monomial_exponents(n: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Variable-index tuples of every monomial of total degree <= degree, graded-lex, constant first."""
    if n < 1 or degree < 1:
        msg = f"need n >= 1 and degree >= 1, got n={n}, degree={degree}"
        raise DataValidationError(msg)
    terms: list[tuple[int, ...]] = [()]
    for k in range(1, degree + 1):
        terms.extend(combinations_with_replacement(range(n), k))
    return tuple(terms)


@lru_cache(maxsize=64)
def _build_plan(n: int, degree: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    # each monomial of degree k >= 1 is a lower monomial times its last variable
    terms = monomial_exponents(n, degree)
    position = {term: i for i, term in enumerate(terms)}
    parents = np.array([position[t[:-1]] for t in terms[1:]], dtype=np.int64)
    variables = np.array([t[-1] for t in terms[1:]], dtype=np.int64)
    return parents, variables


def monomial_names(input_names: Sequence[str], degree: int) -> list[str]:
    names = []
    for term in monomial_exponents(len(input_names), degree):
        if not term:
            names.append("1")
            continue
        parts = []
        for var in sorted(set(term)):
            power = term.count(var)
            parts.append(input_names[var] if power == 1 else f"{input_names[var]}^{power}")
        names.append("*".join(parts))
    return names


def expand_features(x: ArrayLike, degree: int) -> NDArray[np.float64]:
    """
    Expand inputs into the monomial basis.

    A 1-D input of n values yields a vector of C(n+d, d) monomials; a 2-D
    (rows, n) input yields the (rows, C(n+d, d)) design matrix.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    n = rows.shape[1]
    parents, variables = _build_plan(n, degree)
    design = np.empty((rows.shape[0], len(parents) + 1), dtype=np.float64)
    design[:, 0] = 1.0
    for col, (parent, var) in enumerate(zip(parents, variables), start=1):
        design[:, col] = design[:, parent] * rows[:, var]
    return design[0] if single else design


class LeastSquaresSolution(NamedTuple):
    coefficients: NDArray[np.float64]
    rank: int
    singular_values: NDArray[np.float64]
    unidentifiable: list[str]


def unidentifiable_columns(design: NDArray[np.float64], rank: int, names: Sequence[str]) -> list[str]:
    """Columns a rank-revealing pivoted QR leaves after the first `rank` pivots."""
    _, pivots = scipy.linalg.qr(design, mode="r", pivoting=True)
    return [names[i] for i in sorted(pivots[rank:])]


def solve_least_squares(
    design: ArrayLike,
    y: ArrayLike,
    names: Sequence[str] | None = None,
    rcond: float | None = None,
    allow_rank_deficient: bool = False,
    identify: bool = True,
) -> LeastSquaresSolution:
    """
    Minimize ||design @ c - y||² with an SVD-based solve.

    With `allow_rank_deficient` the minimum-norm solution is returned and the
    unidentifiable columns are reported instead of raised (skipped when
    `identify` is false).
    """
    a = np.asarray(design, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    m, n = a.shape
    labels = list(names) if names is not None else [f"c{i}" for i in range(n)]
    if b.shape != (m,):
        msg = f"target length {b.shape} does not match {m} design rows"
        raise DataValidationError(msg)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        msg = "least-squares inputs contain non-finite values"
        raise DataValidationError(msg)
    if m < n and not allow_rank_deficient:
        raise RankDeficientError(m, n, labels[m:])

    cond = rcond if rcond is not None else max(m, n) * np.finfo(np.float64).eps
    coefficients, _, rank, sv = scipy.linalg.lstsq(a, b, cond=cond, lapack_driver="gelsd")
    rank = int(rank)
    missing: list[str] = []
    if rank < n:
        if not allow_rank_deficient:
            raise RankDeficientError(rank, n, unidentifiable_columns(a, rank, labels))
        if identify:
            missing = unidentifiable_columns(a, rank, labels)
        logger.debug(f"minimum-norm solve: rank {rank} of {n}, {len(missing)} unidentifiable monomials")
    return LeastSquaresSolution(np.asarray(coefficients, dtype=np.float64), rank, np.asarray(sv), missing)


def fit_least_squares(
    design: ArrayLike,
    y: ArrayLike,
    names: Sequence[str] | None = None,
    rcond: float | None = None,
) -> NDArray[np.float64]:
    return solve_least_squares(design, y, names=names, rcond=rcond).coefficients
