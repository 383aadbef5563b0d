"""Named problem configurations and the optimal-design / efficiency tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import (
    DEFAULT_D_CONVENTION,
    Criterion,
    Design,
    DesignSpace,
    efficiency,
    uniform_design,
)
from .model import ModelSpec
from .optimize import SolverConfig, optimal_design


@dataclass(frozen=True)
class Preset:
    name: str
    model: ModelSpec
    space: DesignSpace
    extrapolation_point: float
    comparison_designs: dict[str, Design] = field(default_factory=dict)

    def criteria(self) -> dict[str, Criterion]:
        return {
            "D": Criterion.D(),
            "E": Criterion.E(),
            "D1": Criterion.D1(),
            "ce": Criterion.extrapolation(self.extrapolation_point),
        }


def _landete() -> Preset:
    space = DesignSpace(1.0, 14.0)
    return Preset(
        name="landete",
        model=ModelSpec("P1", (0.0002865, 0.0002117, 0.0000301)),
        space=space,
        extrapolation_point=21.0,
        comparison_designs={"xi_u": uniform_design([1, 2, 3, 4, 5, 6, 10, 14], space)},
    )


PRESETS = {"landete": _landete()}


def get_preset(name: str) -> Preset:
    from .errors import ValidationError

    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def optimal_designs(preset: Preset, config: SolverConfig = SolverConfig()) -> dict[str, Design]:
    return {
        name: optimal_design(preset.model, crit, preset.space, config)[0]
        for name, crit in preset.criteria().items()
    }


def table51_rows(preset: Preset, designs: dict[str, Design] | None = None) -> list[list]:
    designs = designs or optimal_designs(preset)
    return [[name, *d.points.tolist(), *d.weights.tolist()] for name, d in designs.items()]


def efficiency_matrix(preset: Preset, designs: dict[str, Design] | None = None,
                      d_convention: str = DEFAULT_D_CONVENTION) -> tuple[list[str], np.ndarray]:
    """Efficiencies (percent) with one row per design and one column per criterion.

    Rows are the comparison designs followed by the optimal designs, columns
    are ordered D, E, D1, ce.
    """
    designs = designs or optimal_designs(preset)
    crits = preset.criteria()
    rows = dict(preset.comparison_designs)
    rows.update({f"xi_{k}": d for k, d in designs.items()})
    mat = np.array([
        [efficiency(d, crit, designs[ck], preset.model, d_convention) for ck, crit in crits.items()]
        for d in rows.values()
    ])
    return list(rows), mat


def table52(preset: Preset, designs: dict[str, Design] | None = None,
            d_convention: str = DEFAULT_D_CONVENTION) -> tuple[list[str], np.ndarray]:
    """Efficiency table in the reference layout.

    The comparison-design rows read naturally (design xi_u under each column
    criterion).  In the block of optimal designs the row names the criterion
    and the column names the design: entry (xi_X, Y) is the X-efficiency of
    the Y-optimal design, i.e. the transpose of ``efficiency_matrix``'s block.
    """
    names, mat = efficiency_matrix(preset, designs, d_convention)
    n_cmp = len(preset.comparison_designs)
    out = mat.copy()
    out[n_cmp:, :] = mat[n_cmp:, :].T
    return names, out
