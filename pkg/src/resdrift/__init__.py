"""Resonant drift orbits near invariant tori, built and checked numerically."""

from .errors import (CapabilityError, ConstructionError, DomainError, IntegrationError,
                     NumericError, ResdriftError, SearchError, SingularityError)
from .flow import (IntegratorConfig, ToySystem, drift_experiment, instability_sweep, integrate,
                   poincare_section, toy_flow)
from .integrable import IntegrableModel, build_integrable
from .path import FrequencyPath, check_conditions, eval_path
from .perturbation import PerturbedSystem, assemble_system
from .resonances import ResonanceChannel, find_resonances
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "CapabilityError", "ConstructionError", "DomainError", "IntegrationError", "NumericError",
    "ResdriftError", "SearchError", "SingularityError", "IntegratorConfig", "ToySystem",
    "drift_experiment", "instability_sweep", "integrate", "poincare_section", "toy_flow",
    "IntegrableModel", "build_integrable", "FrequencyPath", "check_conditions", "eval_path",
    "PerturbedSystem", "assemble_system", "ResonanceChannel", "find_resonances", "Scenario",
    "load_scenario",
]
