"""Box-Cox symmetric and zero-adjusted Box-Cox symmetric regression."""

from .bcs import BcsParams
from .dgf import FAMILY_TAGS, DgfFamily
from .diagnostics import (
    EnvelopeResult,
    GofReport,
    InfluenceResult,
    ResidualSet,
    gof_report,
    local_influence,
    pearson_residuals,
    quantile_residuals,
    randomized_quantile_residuals,
    simulated_envelope,
)
from .errors import (
    BcsymError,
    ConvergenceError,
    DataError,
    FormulaSyntaxError,
    RankDeficiencyError,
    SeparationError,
)
from .formula import DesignMatrices, FormulaAst, build_design, parse_formula
from .links import positive_link, probability_link
from .regress import (
    FittedModel,
    ModelSpec,
    fit,
    fit_bcs,
    fit_zabcs,
    select_zeta,
    upsilon_statistic,
    wald_inference,
)
from .zabcs import ZabcsParams

__version__ = "0.1.0"

__all__ = [
    "BcsParams", "BcsymError", "ConvergenceError", "DataError",
    "DesignMatrices", "DgfFamily", "EnvelopeResult", "FAMILY_TAGS",
    "FittedModel", "FormulaAst", "FormulaSyntaxError", "GofReport",
    "InfluenceResult", "ModelSpec", "RankDeficiencyError", "ResidualSet",
    "SeparationError", "ZabcsParams", "build_design", "fit", "fit_bcs",
    "fit_zabcs", "gof_report", "local_influence", "parse_formula",
    "pearson_residuals", "positive_link", "probability_link",
    "quantile_residuals", "randomized_quantile_residuals", "select_zeta",
    "simulated_envelope", "upsilon_statistic", "wald_inference",
]
