"""Material-point models of hot isostatic pressing of metal powders.

Two constitutive models are provided: a density-dependent power-law
visco-plastic model (``abouaf``) and a rate-independent modified Cam-Clay
model (``mccp``). Both are integrated implicitly at a single material point
under hydrostatic HIP cycles or uniaxial compression, and the visco-plastic
parameters can be identified from yield-stress and densification data.
"""
from .abouaf import (VpDerivatives, VpIncrement, density_update, equivalent_stress,
                     vp_derivatives, vp_increments, vp_strain_rate)
from .calibration import (CalibrationConfig, CalibrationDataset, CalibrationResult,
                          calibrate_AN, calibrate_c, invert_f, run_pipeline,
                          simulate_yield_stress)
from .errors import (CalibrationError, ConfigurationError, DomainError, HipvpError,
                     IntegrationError, ReturnMapError, SingularDerivativeError,
                     YieldExtractionError)
from .integrator import (CSV_COLUMNS, HydrostaticHip, IntegratorOptions, LoadingProgram,
                         Trajectory, UniaxialCompression, extract_yield_stress, integrate,
                         mean_series)
from .mccp import MccpParams, mccp_step, yield_value
from .state import HipSchedule, PointState
from .tables import MaterialTables, Table1D, Table2D
from .tensors import SymTensor3, invariants

__version__ = "0.1.0"

__all__ = [
    "CSV_COLUMNS", "CalibrationConfig", "CalibrationDataset", "CalibrationError",
    "CalibrationResult", "ConfigurationError", "DomainError", "HipSchedule", "HipvpError",
    "HydrostaticHip", "IntegrationError", "IntegratorOptions", "LoadingProgram",
    "MaterialTables", "MccpParams", "PointState", "ReturnMapError",
    "SingularDerivativeError", "SymTensor3", "Table1D", "Table2D", "Trajectory",
    "UniaxialCompression", "VpDerivatives", "VpIncrement", "YieldExtractionError",
    "calibrate_AN", "calibrate_c", "density_update", "equivalent_stress",
    "extract_yield_stress", "integrate", "invariants", "invert_f", "mean_series",
    "mccp_step", "run_pipeline", "simulate_yield_stress", "vp_derivatives",
    "vp_increments", "vp_strain_rate", "yield_value",
]
