from pymjnn.lmi.blocks import (
    BlockLayout,
    eta_selector,
    lifted_sector_multiplier,
    schur_complement_sign_agrees,
    schur_embed,
    sector_multiplier_blocks,
)
from pymjnn.lmi.conditions import (
    assemble_analysis_known,
    assemble_analysis_partial,
    assemble_performance,
    assemble_synthesis,
    gains_from_assignment,
    successor_vertices,
)
from pymjnn.lmi.expressions import AffineMatrixExpr, ExprBuilder, Term
from pymjnn.lmi.problem import Constraint, LinearObjective, LmiProblem
from pymjnn.lmi.variables import DecisionVar

__all__ = [
    "AffineMatrixExpr",
    "BlockLayout",
    "Constraint",
    "DecisionVar",
    "ExprBuilder",
    "LinearObjective",
    "LmiProblem",
    "Term",
    "assemble_analysis_known",
    "assemble_analysis_partial",
    "assemble_performance",
    "assemble_synthesis",
    "eta_selector",
    "gains_from_assignment",
    "lifted_sector_multiplier",
    "schur_complement_sign_agrees",
    "schur_embed",
    "sector_multiplier_blocks",
    "successor_vertices",
]
