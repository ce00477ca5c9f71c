import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv

from ._errors import InvalidSolverConfig
from ._settings import (
    DEFAULT_ENUMERATION_GUARD,
    DEFAULT_MAX_CLIQUES,
    DEFAULT_SPARSE_THRESHOLD,
    ENV_PREFIX,
)

LOCAL_FITTERS = ("ipf", "newton")


@dataclass(frozen=True)
class SolverConfig:
    """
    All numerical knobs shared by the estimators, the samplers and the harness. Every
    field can be overridden from the environment (``DLL_<FIELD>``, optionally read from
    a ``.env`` file) or, in the CLI, by the flag of the same name.
    """

    ipf_tolerance: float = 1e-10
    """Largest allowed gap between fitted and data marginal probabilities."""
    ipf_max_cycles: int = 10_000
    newton_tolerance: float = 1e-10
    """Convergence threshold on the infinity norm of the per-observation gradient."""
    newton_max_iterations: int = 200
    newton_max_halvings: int = 50
    epsilon_smoothing: float = 0.0
    """Constant added to every cell count before fitting; 0 switches smoothing off."""
    divergence_threshold: float = 30.0
    """Any |theta_j| above this flags the MLE as nonexistent."""
    enumeration_guard: int = DEFAULT_ENUMERATION_GUARD
    local_enumeration_guard: int = DEFAULT_ENUMERATION_GUARD
    sparse_threshold: int = DEFAULT_SPARSE_THRESHOLD
    local_fitter: str = "ipf"
    max_cliques: int = DEFAULT_MAX_CLIQUES

    def __post_init__(self):
        for name in ("ipf_tolerance", "newton_tolerance", "divergence_threshold"):
            if not getattr(self, name) > 0:
                raise InvalidSolverConfig(f"{name} must be positive")
        for name in (
            "ipf_max_cycles",
            "newton_max_iterations",
            "enumeration_guard",
            "local_enumeration_guard",
            "sparse_threshold",
            "max_cliques",
        ):
            if getattr(self, name) < 1:
                raise InvalidSolverConfig(f"{name} must be at least 1")
        if self.newton_max_halvings < 0:
            raise InvalidSolverConfig("newton_max_halvings must not be negative")
        if self.epsilon_smoothing < 0:
            raise InvalidSolverConfig("epsilon_smoothing must not be negative")
        if self.local_fitter not in LOCAL_FITTERS:
            raise InvalidSolverConfig(
                f"local_fitter must be one of {', '.join(LOCAL_FITTERS)}, "
                f"not {self.local_fitter!r}"
            )

    def with_overrides(self, **overrides: Any) -> "SolverConfig":
        return replace(
            self, **{name: value for name, value in overrides.items() if value is not None}
        )

    def to_raw_data(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_env(
        cls, dotenv_path: Optional[Union[str, Path]] = None
    ) -> "SolverConfig":
        """
        Builds a config from ``DLL_*`` environment variables. If a ``.env`` file exists
        (at `dotenv_path` or in the working directory) it is loaded first, without
        overriding variables which are already set.
        """
        load_dotenv(dotenv_path=dotenv_path)
        overrides = {}
        for field in fields(cls):
            raw_value = os.getenv(ENV_PREFIX + field.name.upper())
            if raw_value is None or raw_value.strip() == "":
                continue
            try:
                overrides[field.name] = _coerce(field.type, raw_value.strip())
            except ValueError:
                raise InvalidSolverConfig(
                    f"{ENV_PREFIX}{field.name.upper()}={raw_value!r} is not a valid "
                    f"{field.type}"
                )
        return cls(**overrides)


def _coerce(field_type: Any, raw_value: str) -> Any:
    type_name = field_type if isinstance(field_type, str) else field_type.__name__
    if type_name == "int":
        return int(float(raw_value)) if "e" in raw_value.lower() else int(raw_value)
    if type_name == "float":
        return float(raw_value)
    return raw_value
