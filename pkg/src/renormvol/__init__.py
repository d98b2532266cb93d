"""Renormalized volume, singular Yamabe expansions and the energy of
hypersurfaces in conformally compact manifolds."""
from .anomaly import anomaly_report, conformal_jets
from .collar import CollarJets, collar_consistency_check, exact_collar, numeric_collar
from .config import RunConfig, parse_config, serialize_config
from .expr import ExprAst, ExprError, eval_jet, eval_value, parse_expr
from .geometry import (
    ConformalFlat,
    Euclidean,
    GeometryError,
    HypersurfaceData,
    SpaceForm,
    SurfaceGrid,
    build_surface,
    fundamental_forms,
    homogeneous_sphere,
    surface_integrate,
)
from .grid import GridSpec
from .pipeline import Analysis, analyze, analyze_data, analyze_homogeneous
from .renvol import VolumeData, closed_form_v12, volume_coefficients
from .series import LogSeries, MatrixSeries
from .variation import energy_variation_fd, variation_rhs
from .volprobe import fit_expansion, get_model, probe_volume
from .yamabe import YamabeExpansion, closed_form_phis, indicial_self_test, residual_scan, solve_yamabe

__version__ = "0.1.0"

__all__ = [
    "anomaly_report",
    "conformal_jets",
    "CollarJets",
    "collar_consistency_check",
    "exact_collar",
    "numeric_collar",
    "RunConfig",
    "parse_config",
    "serialize_config",
    "ExprAst",
    "ExprError",
    "eval_jet",
    "eval_value",
    "parse_expr",
    "ConformalFlat",
    "Euclidean",
    "GeometryError",
    "HypersurfaceData",
    "SpaceForm",
    "SurfaceGrid",
    "build_surface",
    "fundamental_forms",
    "homogeneous_sphere",
    "surface_integrate",
    "GridSpec",
    "Analysis",
    "analyze",
    "analyze_data",
    "analyze_homogeneous",
    "VolumeData",
    "closed_form_v12",
    "volume_coefficients",
    "LogSeries",
    "MatrixSeries",
    "energy_variation_fd",
    "variation_rhs",
    "fit_expansion",
    "get_model",
    "probe_volume",
    "YamabeExpansion",
    "closed_form_phis",
    "indicial_self_test",
    "residual_scan",
    "solve_yamabe",
]
