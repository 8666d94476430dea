"""Change of measure by a strictly positive density.

Writing the working measure as d(mu) = h d(nu), the operator over nu is
the isometric conjugate of the operator over mu:

    K_h(x, y) = h(x)^(1/p) K(x, y) h(y)^(1/q),   1/p + 1/q = 1,

acting against the nu-weights w_i / h_i.  Conjugation is an exact
similarity on the discrete level, so the spectrum is preserved to
rounding error and eigenvectors transport through f -> h^(1/p) f.

Row/column Schur certificates transport with both weights multiplied by
h^(1/p) (the same isometry that moves the functions).  That transport
preserves the constant exactly when p = 2, and for any p when h is
constant; for non-constant h with p != 2 no single weight pair keeps
both inequalities with the same constant, which the tests document.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel_op import Kernel, SchurBound
from .measure import GridFunction, MeasureSpace, check_same_space


@dataclass(frozen=True, eq=False)
class MeasureChange:
    """Strictly positive density h with conjugation exponent p in [1, inf)."""

    density: GridFunction
    exponent: float = 2.0

    def __post_init__(self):
        if not self.density.is_strictly_positive():
            raise ValueError("measure-change densities must be strictly positive")
        if self.exponent < 1:
            raise ValueError("exponent must be >= 1")

    @property
    def conjugate_exponent(self) -> float:
        if self.exponent == 1.0:
            return np.inf
        return self.exponent / (self.exponent - 1.0)

    def row_factor(self) -> np.ndarray:
        return self.density.values ** (1.0 / self.exponent)

    def col_factor(self) -> np.ndarray:
        q = self.conjugate_exponent
        if np.isinf(q):
            return np.ones(self.density.size)
        return self.density.values ** (1.0 / q)


def changed_space(mc: MeasureChange) -> MeasureSpace:
    """Same nodes, weights divided by the density: the nu-space."""
    base = mc.density.space
    return MeasureSpace(base.nodes, base.weights / mc.density.values, kind="weighted")


def conjugate_kernel(kernel: Kernel, mc: MeasureChange) -> Kernel:
    """h^(1/p)-weighted conjugate over the nu-space; same spectrum."""
    check_same_space(kernel.space, mc.density.space)
    entries = (
        mc.row_factor()[:, np.newaxis] * kernel.entries * mc.col_factor()[np.newaxis, :]
    )
    return Kernel(entries, changed_space(mc))


def transport_function(f: GridFunction, mc: MeasureChange) -> GridFunction:
    """Image of f under the isometry: h^(1/p) * f on the nu-space."""
    check_same_space(f.space, mc.density.space)
    return GridFunction(mc.row_factor() * f.values, changed_space(mc))


def transform_schur(bound: SchurBound, mc: MeasureChange) -> SchurBound:
    """Transport a Schur certificate along the isometry, keeping C.

    Both weights are moved by the same factor h^(1/p) as the functions
    they bound.  Exact (same constant, same ratios) for p = 2 and for
    constant densities at any p.
    """
    check_same_space(bound.row_weight.space, mc.density.space)
    space = changed_space(mc)
    factor = mc.row_factor()
    return SchurBound(
        GridFunction(factor * bound.row_weight.values, space),
        GridFunction(factor * bound.col_weight.values, space),
        bound.constant,
    )


def inverse_change(mc: MeasureChange) -> MeasureChange:
    """The change that undoes mc, defined on the nu-space."""
    space = changed_space(mc)
    return MeasureChange(
        GridFunction(1.0 / mc.density.values, space), mc.exponent
    )
