"""Rank-one inversion and the Birman-Schwinger scalar function.

A rank-one split T = alpha*(profile x phi) + R turns the resolvent of T
into an explicit correction of the resolvent of the remainder:

    (lam*I - T)^-1 = R_lam + alpha * (R_lam u) x (phi o R_lam) / D(lam)

where R_lam = (lam*I - R)^-1, u is the certificate profile and

    D(lam) = 1 - alpha * phi[R_lam u].

D is the Birman-Schwinger function of the rank-one perturbation; it is
also its Fredholm determinant, det(I - a x b) = 1 - b[a].  D increases
strictly on (rho(R), inf), tends to 1 at infinity, and its unique root
there is the dominant eigenvalue of T.  Everything here works for real
lam above the remainder's spectral radius; no eigensolver is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .doeblin import RankOneSplit
from .errors import (
    AtEigenvalueError,
    BelowSpectralRadiusError,
    IllConditionedError,
    NearSingularError,
    NotConvergentError,
    PoleError,
)
from .kernel_op import spectral_radius_oracle
from .measure import GridFunction, WeightFunctional, check_same_space, pair

NEAR_SINGULAR = 1e-12
AT_EIGENVALUE = 1e-12
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class RankOneOperator:
    """a x b acting as f -> range_vector * functional[f]."""

    range_vector: GridFunction
    functional: WeightFunctional

    def __post_init__(self):
        check_same_space(self.range_vector.space, self.functional.space)

    def coupling(self) -> float:
        """b[a], the only spectral datum of a rank-one operator."""
        return pair(self.functional, self.range_vector)

    def apply(self, f: GridFunction) -> GridFunction:
        return GridFunction(
            self.range_vector.values * pair(self.functional, f),
            self.range_vector.space,
        )

    def matrix(self) -> np.ndarray:
        """Dense matrix acting on node-value vectors."""
        return np.outer(self.range_vector.values, self.functional.acting_vector())


def sherman_morrison_apply(op: RankOneOperator, f: GridFunction) -> GridFunction:
    """(I - a x b)^-1 f = f + a * b[f] / (1 - b[a])."""
    check_same_space(op.range_vector.space, f.space)
    denom = 1.0 - op.coupling()
    if abs(denom) <= NEAR_SINGULAR:
        raise NearSingularError(f"1 - b[a] = {denom:.3e} is numerically zero")
    return GridFunction(
        f.values + op.range_vector.values * (pair(op.functional, f) / denom),
        f.space,
    )


def rank_one_resolvent_apply(op: RankOneOperator, lam: float, f: GridFunction) -> GridFunction:
    """(lam*I - a x b)^-1 f; simple poles at 0 and at the coupling b[a]."""
    check_same_space(op.range_vector.space, f.space)
    coupling = op.coupling()
    if abs(lam) <= NEAR_SINGULAR:
        raise PoleError(0.0)
    if abs(lam - coupling) <= NEAR_SINGULAR:
        raise PoleError(coupling)
    return GridFunction(
        f.values / lam
        + op.range_vector.values * (pair(op.functional, f) / (lam * (lam - coupling))),
        f.space,
    )


def fredholm_det_rank_one(op: RankOneOperator) -> float:
    """det(I - a x b) = 1 - b[a]."""
    return 1.0 - op.coupling()


class BirmanSchwingerEvaluator:
    """Evaluates D(lam), its derivative, and resolvent applications.

    Two backends solve (lam*I - R) x = v: a cached LU factorization
    (default) and a Neumann series whose convergence is guarded by the
    weighted sup-norm of the remainder.  The evaluator is immutable
    apart from the internal LU cache, which never changes results.
    """

    def __init__(
        self,
        split: RankOneSplit,
        solver: str = "direct_lu",
        series_tol: float = 1e-13,
        max_terms: int = 100_000,
        radius_tol: float = 1e-10,
    ):
        if solver not in ("direct_lu", "neumann"):
            raise ValueError(f"unknown solver {solver!r}")
        self.split = split
        self.solver = solver
        self.series_tol = float(series_tol)
        self.max_terms = int(max_terms)
        self.space = split.kernel.space
        self.alpha = split.certificate.alpha
        self.profile = split.certificate.profile
        self.functional = split.certificate.functional
        self._rem_op = split.remainder.operator_matrix()
        self.remainder_norm = split.remainder.weighted_inf_norm()
        self.operator_norm = split.kernel.weighted_inf_norm()
        power = spectral_radius_oracle(split.remainder, tol=radius_tol)
        # inflate: the precondition lam > rho(R) must survive estimate error
        self.remainder_radius = power.rho * (1.0 + 1e-8)
        self._lu_cache: dict[float, tuple] = {}

    @property
    def phi_strictly_positive(self) -> bool:
        return self.functional.strictly_positive

    def _require_above_radius(self, lam: float) -> None:
        if lam <= self.remainder_radius:
            raise BelowSpectralRadiusError(lam, self.remainder_radius)

    def _factorize(self, lam: float):
        key = float(lam)
        cached = self._lu_cache.get(key)
        if cached is not None:
            return cached
        shifted = lam * np.eye(self.space.size) - self._rem_op
        anorm = float(np.abs(shifted).sum(axis=1).max())
        lu, piv = lu_factor(shifted)
        gecon = get_lapack_funcs(("gecon",), (shifted,))[0]
        rcond, info = gecon(lu, anorm, norm="I")
        if info != 0 or rcond <= 1.0 / MAX_CONDITION:
            raise IllConditionedError(
                f"shifted remainder at lambda = {lam} has condition estimate "
                f"{1.0 / max(rcond, 1e-300):.3e}"
            )
        self._lu_cache[key] = (lu, piv)
        return lu, piv

    def _solve_neumann(self, lam: float, v: np.ndarray) -> np.ndarray:
        if lam <= self.remainder_norm:
            raise NotConvergentError(
                f"Neumann mode requires lambda > remainder norm "
                f"{self.remainder_norm:.6e}, got {lam}"
            )
        ratio = self.remainder_norm / lam
        term = v / lam
        acc = term.copy()
        for _ in range(self.max_terms):
            term = (self._rem_op @ term) / lam
            acc += term
            # relative stopping rule: callers rescale the result, so only
            # relative accuracy survives
            tail = float(np.max(np.abs(term))) * ratio / (1.0 - ratio)
            if tail <= self.series_tol * float(np.max(np.abs(acc))):
                return acc
        raise NotConvergentError("Neumann series did not meet its tolerance")

    def resolve_remainder(self, lam: float, v: GridFunction) -> GridFunction:
        """(lam*I - R)^-1 v for lam above the remainder radius."""
        check_same_space(self.space, v.space)
        self._require_above_radius(lam)
        if self.solver == "direct_lu":
            lu, piv = self._factorize(lam)
            x = lu_solve((lu, piv), v.values)
        else:
            x = self._solve_neumann(lam, v.values)
        return GridFunction(x, self.space)

    def value(self, lam: float) -> float:
        """D(lam) = 1 - alpha * phi[(lam*I - R)^-1 profile]."""
        return 1.0 - self.alpha * pair(
            self.functional, self.resolve_remainder(lam, self.profile)
        )

    def derivative(self, lam: float) -> float:
        """D'(lam) = alpha * phi[(lam*I - R)^-2 profile]; strictly positive."""
        once = self.resolve_remainder(lam, self.profile)
        twice = self.resolve_remainder(lam, once)
        return self.alpha * pair(self.functional, twice)

    def resolve_operator(self, lam: float, f: GridFunction) -> GridFunction:
        """(lam*I - T)^-1 f via the factorized formula."""
        check_same_space(self.space, f.space)
        d = self.value(lam)
        if abs(d) <= AT_EIGENVALUE:
            raise AtEigenvalueError(lam, d)
        rf = self.resolve_remainder(lam, f)
        ru = self.resolve_remainder(lam, self.profile)
        correction = self.alpha * pair(self.functional, rf) / d
        return GridFunction(rf.values + ru.values * correction, self.space)

    def left_remainder_solve(self, lam: float) -> np.ndarray:
        """Vector z with z^T = (phi o R_lam) acting on node-value vectors.

        Solves the transposed shifted system against the functional's
        acting vector; z realizes f -> phi[(lam*I - R)^-1 f] as z . f.
        """
        self._require_above_radius(lam)
        shifted = lam * np.eye(self.space.size) - self._rem_op
        return np.linalg.solve(shifted.T, self.functional.acting_vector())
