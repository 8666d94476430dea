"""Dominant eigenvalue, eigenfunction, and rank-one spectral projection.

The dominant eigenvalue of T is located as the unique root of the
Birman-Schwinger function above the remainder radius: bracket by
geometric expansion (D is strictly increasing there and tends to 1),
then safeguarded Newton with bisection fallback.  The eigenfunction and
the rank-one spectral projection fall out of the residue of the
factorized resolvent at that root; a deflated power iteration provides
the second-radius diagnostic certifying strict dominance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .doeblin import (
    MinorizationCertificate,
    NotMinorizable,
    RankOneSplit,
    extract_minorization,
    rank_one_split,
)
from .errors import (
    IllConditionedError,
    NoSignChangeError,
    NotConvergentError,
    NotMinorizableError,
    SlowConvergenceError,
)
from .kernel_op import Kernel, growth_radius
from .measure import GridFunction, WeightFunctional, pair
from .resolvent import BirmanSchwingerEvaluator, RankOneOperator


@dataclass(frozen=True)
class SpectralDiagnostics:
    eig_residual: float          # sup |T w - lambda0 w| / sup |w|
    proj_idempotency: float      # sup-operator norm of P^2 - P (residue formula)
    bs_at_lambda0: float         # D(lambda0)
    gap_to_remainder_radius: float
    left_residual: float         # left functional row composed with T vs lambda0 * row
    rank_one_defect: float       # column proportionality defect of the projection
    min_eigenfunction_value: float


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Dominant eigenvalue with normalized eigenvector and left row.

    ``eigenfunction`` is normalized so the certificate pairing equals 1;
    ``left_row`` is scaled so the rank-one projection
    ``eigenfunction x left_row`` has trace 1.
    """

    lambda0: float
    eigenfunction: GridFunction
    left_row: WeightFunctional
    projection: RankOneOperator
    diagnostics: SpectralDiagnostics
    certificate: MinorizationCertificate
    evaluator: BirmanSchwingerEvaluator


def find_dominant(ev: BirmanSchwingerEvaluator, tol: float = 1e-12) -> float:
    """Unique root of D above the remainder radius.

    Expands geometrically from the radius estimate until the sign flips
    (D < 0 just above the radius whenever a root exists, D -> 1 at
    infinity), then runs Newton safeguarded by the bracket.  Raises
    NoSignChangeError when D stays positive up to 10 * ||T||, which
    signals a certificate too weak to see the dominant eigenvalue.
    """
    if tol < 1e-13:
        raise ValueError("tol below 1e-13 is not resolvable in double precision")
    if not ev.phi_strictly_positive:
        raise NotMinorizableError(
            NotMinorizable("root finding requires a strictly positive functional")
        )
    rho = ev.remainder_radius
    if ev.solver == "neumann":
        # the series backend converges only above the remainder norm, and
        # impractically slowly right at it; keep a workable margin
        rho = max(rho, ev.remainder_norm * (1.0 + 1e-3))
    cap = 10.0 * max(ev.operator_norm, np.finfo(float).tiny)
    delta = 1e-6

    def eval_d(lam):
        return ev.value(lam)

    lo = rho * (1.0 + delta) if rho > 0 else delta * max(ev.operator_norm, 1e-300)
    d_lo = None
    for _ in range(8):  # ill-conditioning right above rho(R): back off outward
        try:
            d_lo = eval_d(lo)
            break
        except IllConditionedError:
            lo = rho + (lo - rho) * 4.0
    if d_lo is None:
        raise NoSignChangeError("shifted remainder is ill-conditioned above its radius")

    shrink = 0
    while d_lo >= 0 and shrink < 60:
        # root may sit closer to rho(R) than the first probe
        lo_new = rho + (lo - rho) * 0.5
        if lo_new <= rho or lo_new == lo:
            break
        try:
            d_new = eval_d(lo_new)
        except IllConditionedError:
            break
        lo, d_lo = lo_new, d_new
        shrink += 1
    if d_lo >= 0:
        raise NoSignChangeError(
            "D has no sign change above the remainder radius: certificate too "
            "weak or the radius estimate is an overestimate"
        )

    hi = None
    offset = lo - rho
    k = 0
    while hi is None:
        k += 1
        cand = min(rho + offset * (2.0**k), cap)
        d_cand = eval_d(cand)
        if d_cand > 0:
            hi = cand
        else:
            lo, d_lo = cand, d_cand
            if cand >= cap:
                raise NoSignChangeError(f"D stayed negative up to {cap}")

    x = 0.5 * (lo + hi)
    for _ in range(200):
        dx = eval_d(x)
        if dx > 0:
            hi = x
        else:
            lo = x
        dpx = ev.derivative(x)
        if abs(dx) <= tol * max(1.0, abs(dpx) * x):
            return float(x)
        if hi - lo <= 8 * np.finfo(float).eps * max(1.0, x):
            return float(0.5 * (lo + hi))
        step = x - dx / dpx if dpx > 0 else None
        x = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
    raise NotConvergentError("root refinement did not converge")


def eigenfunction_from_residue(
    ev: BirmanSchwingerEvaluator, lambda0: float
) -> GridFunction:
    """(alpha / D'(lambda0)) * (lambda0*I - R)^-1 profile, then normalized
    so the certificate pairing equals 1."""
    if abs(ev.value(lambda0)) > 1e-6 * max(1.0, ev.derivative(lambda0) * lambda0):
        raise ValueError(f"lambda0 = {lambda0} is not a root of D")
    ru = ev.resolve_remainder(lambda0, ev.profile)
    scale = ev.alpha / ev.derivative(lambda0)
    raw = GridFunction(scale * ru.values, ev.space)
    mass = pair(ev.functional, raw)
    if mass <= 0:
        raise NotConvergentError("eigenfunction has nonpositive pairing mass")
    return GridFunction(raw.values / mass, ev.space)


def spectral_projection(ev: BirmanSchwingerEvaluator, lambda0: float) -> RankOneOperator:
    """Residue of the factorized resolvent at the root:
    alpha * (R_lam0 profile) x (phi o R_lam0) / D'(lambda0).

    Idempotency is a consequence, not an input: the pairing of the two
    factors equals D'(lambda0)/alpha exactly, so P^2 = P holds up to the
    accuracy of the two resolvent solves.
    """
    ru = ev.resolve_remainder(lambda0, ev.profile)
    z = ev.left_remainder_solve(lambda0)
    scale = ev.alpha / ev.derivative(lambda0)
    w = ev.space.weights
    return RankOneOperator(
        GridFunction(scale * ru.values, ev.space),
        WeightFunctional(z / w, ev.space),
    )


def series_term_norms(
    ev: BirmanSchwingerEvaluator, lambda0: float, n_terms: int
) -> np.ndarray:
    """Sup norms of the series terms lambda0^-(n+1) * R^n profile.

    The term recurrence is carried in scaled form, term -> (R term)/lam,
    so nothing underflows even when the unscaled factors would."""
    rem = ev.split.remainder.operator_matrix()
    term = ev.profile.values / lambda0
    norms = np.empty(n_terms)
    for n in range(n_terms):
        norms[n] = float(np.max(np.abs(term)))
        term = (rem @ term) / lambda0
    return norms


def eigenfunction_series(
    ev: BirmanSchwingerEvaluator,
    lambda0: float,
    tol: float = 1e-12,
    max_terms: int = 20_000,
) -> GridFunction:
    """Eigenfunction through the geometric series sum_n lambda0^-(n+1) R^n profile.

    Converges at ratio rho(R)/lambda0; raises SlowConvergenceError when
    that ratio is numerically 1 or the term budget is exhausted.  The
    result carries the same pairing normalization as the residue route.
    """
    ratio = ev.remainder_radius / lambda0
    if ratio >= 1.0 - 1e-6:
        raise SlowConvergenceError(
            f"series contraction ratio {ratio:.8f} is too close to one"
        )
    rem = ev.split.remainder.operator_matrix()
    term = ev.profile.values / lambda0
    acc = term.copy()
    for n in range(1, max_terms + 1):
        # scaled recurrence: unscaled numerator and denominator both
        # underflow for long series when lambda0 < 1
        term = (rem @ term) / lambda0
        acc = acc + term
        # geometric tail, relative to the running sum: the normalization
        # at the end is a scalar, so relative accuracy is what survives
        tail = float(np.max(np.abs(term))) * ratio / (1.0 - ratio)
        if tail <= tol * float(np.max(np.abs(acc))):
            break
    else:
        raise SlowConvergenceError(
            f"series needed more than {max_terms} terms (ratio {ratio:.6f})"
        )
    raw = GridFunction(acc, ev.space)
    mass = pair(ev.functional, raw)
    return GridFunction(raw.values / mass, ev.space)


def _column_proportionality_defect(matrix: np.ndarray) -> float:
    norms = np.abs(matrix).sum(axis=0)
    ref = int(np.argmax(norms))
    if norms[ref] == 0:
        return 0.0
    ref_col = matrix[:, ref]
    denom = float(ref_col @ ref_col)
    scales = (matrix.T @ ref_col) / denom
    resid = matrix - np.outer(ref_col, scales)
    scale = max(np.abs(matrix).max(), 1e-300)
    return float(np.abs(resid).max() / scale)


def _operator_inf_norm(matrix: np.ndarray) -> float:
    return float(np.abs(matrix).sum(axis=1).max())


def solve(
    kernel: Kernel,
    strategy: str = "row_min",
    certificate: MinorizationCertificate | None = None,
    tol: float = 1e-12,
    solver: str = "direct_lu",
) -> SpectralResult:
    """Full pipeline: certificate, split, root of D, residue extraction.

    Raises NotMinorizableError when no strict certificate of the chosen
    shape exists (callers may fall back to a power-Doeblin analysis).
    """
    if certificate is None:
        certificate = extract_minorization(kernel, strategy)
        if isinstance(certificate, NotMinorizable):
            raise NotMinorizableError(certificate)
    if certificate.power != 1:
        raise ValueError("solve requires a power-1 certificate; iterate the kernel first")
    split = rank_one_split(kernel, certificate)
    ev = BirmanSchwingerEvaluator(split, solver=solver)
    lambda0 = find_dominant(ev, tol=tol)

    w_fun = eigenfunction_from_residue(ev, lambda0)
    projection_raw = spectral_projection(ev, lambda0)
    p_mat = projection_raw.matrix()

    # trace-normalized representation w x left_row of the same projection
    z = projection_raw.functional.acting_vector()
    left_scale = float(np.dot(z, w_fun.values))
    left_row = WeightFunctional(
        projection_raw.functional.density / left_scale, ev.space
    )

    t_op = kernel.operator_matrix()
    tw = t_op @ w_fun.values
    eig_residual = float(np.max(np.abs(tw - lambda0 * w_fun.values)) / w_fun.sup_norm())
    p2 = p_mat @ p_mat
    proj_idem = _operator_inf_norm(p2 - p_mat)
    lr = left_row.acting_vector()
    left_residual = float(
        np.max(np.abs(t_op.T @ lr - lambda0 * lr)) / max(np.max(np.abs(lr)), 1e-300)
    )
    diagnostics = SpectralDiagnostics(
        eig_residual=eig_residual,
        proj_idempotency=proj_idem,
        bs_at_lambda0=ev.value(lambda0),
        gap_to_remainder_radius=lambda0 - ev.remainder_radius,
        left_residual=left_residual,
        rank_one_defect=_column_proportionality_defect(p_mat),
        min_eigenfunction_value=float(w_fun.values.min()),
    )
    return SpectralResult(
        lambda0=lambda0,
        eigenfunction=w_fun,
        left_row=left_row,
        projection=RankOneOperator(w_fun, left_row),
        diagnostics=diagnostics,
        certificate=certificate,
        evaluator=ev,
    )


@dataclass(frozen=True)
class DominanceReport:
    lambda0: float
    second_radius: float
    gap_ratio: float            # second_radius / lambda0
    strictly_dominant: bool
    eig_residual: float
    proj_idempotency: float


def verify_dominance(kernel: Kernel, result: SpectralResult) -> DominanceReport:
    """Deflation check: remove the rank-one projection and measure the
    spectral radius of what is left."""
    t_op = kernel.operator_matrix()
    p = result.projection.matrix()
    eye = np.eye(kernel.size)
    deflated = (eye - p) @ t_op @ (eye - p)
    rho2 = growth_radius(deflated)
    return DominanceReport(
        lambda0=result.lambda0,
        second_radius=rho2,
        gap_ratio=rho2 / result.lambda0,
        strictly_dominant=rho2 < result.lambda0 * (1.0 - 1e-9),
        eig_residual=result.diagnostics.eig_residual,
        proj_idempotency=result.diagnostics.proj_idempotency,
    )
