"""Experiment, learner and CLI configuration models."""
from typing import List, Literal, Optional, Set, Tuple

from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from ucwhittle.config import DEFAULT_DELTA, INDEX_WIDTH, SOLVER_TOL

ALGORITHMS = ("ucw-value", "ucw-penalty", "extreme", "wiql", "random", "oracle")


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class LearnerConfig(BaseModel):
    """Knobs shared by every learner."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(0.9, gt=0.0, lt=1.0, description="Discount factor")
    delta: float = Field(DEFAULT_DELTA, gt=0.0, lt=1.0, description="Confidence failure probability")
    solver_tol: float = Field(SOLVER_TOL, gt=0.0, description="Penalized-MDP solver tolerance")
    index_width: float = Field(INDEX_WIDTH, gt=0.0, description="Index bisection stopping width")
    memoize: bool = Field(True, description="Memoize index searches on rounded kernels")
    prune: bool = Field(True, description="Stop index searches that cannot reach the top K")
    planning_workers: int = Field(1, ge=1, description="Threads for per-arm planning")
    wiql_epsilon: Optional[float] = Field(
        None, ge=0.0, le=1.0, description="Fixed WIQL exploration rate; decaying schedule when unset"
    )
    gap_rows: Literal["optimistic", "sensitivity"] = Field(
        "optimistic", description="Rows outside (state, a) during UCW-penalty gap ascent"
    )
    visit_ties: bool = Field(True, description="Break equal UCWhittle indices toward the least-pulled arm")


class ExperimentConfig(BaseModel):
    """One regret experiment: domain, problem size, algorithms and outputs."""

    model_config = ConfigDict(populate_by_name=True)

    domain: Literal["wide", "thin", "dataset"] = Field("wide", description="Instance source")
    dataset_path: Optional[str] = Field(None, description="CSV for the dataset domain")
    dataset_strict: bool = Field(True, description="Abort on malformed dataset rows")
    resample_population: bool = Field(True, description="Draw a fresh population per seed")
    population_seed: int = Field(0, description="Population seed when not resampling")

    num_arms: int = Field(8, ge=1, validation_alias=AliasChoices("num_arms", "N"))
    budget: int = Field(3, ge=1, validation_alias=AliasChoices("budget", "K"))
    horizon: int = Field(20, ge=1, validation_alias=AliasChoices("horizon", "H"))
    episodes: int = Field(40, ge=1, validation_alias=AliasChoices("episodes", "T"))
    timesteps: Optional[int] = Field(None, ge=1, description="Total timesteps; when set, T becomes timesteps // H")
    gamma: float = Field(0.9, gt=0.0, lt=1.0, validation_alias=AliasChoices("gamma", "discount"))
    delta: float = Field(DEFAULT_DELTA, gt=0.0, lt=1.0)
    seeds: List[int] = Field(default_factory=lambda: list(range(30)))
    algorithms: List[str] = Field(default_factory=lambda: list(ALGORITHMS))
    smoothing_weight: float = Field(
        0.9, ge=0.0, lt=1.0, validation_alias=AliasChoices("smoothing_weight", "weight")
    )
    output_dir: Optional[str] = None

    workers: int = Field(1, ge=1, description="Processes for (seed x algorithm) runs")
    serial_timing: bool = Field(True, description="Force single-worker runs so timings compare")
    check_optimism: bool = Field(True, description="Verify optimistic values against the true kernels")
    diagnostics: bool = Field(False, description="Record per-episode action diversity and index spread")
    epsilon_override: Optional[float] = Field(None, gt=0.0, lt=1.0)

    solver_tol: float = Field(SOLVER_TOL, gt=0.0)
    index_width: float = Field(INDEX_WIDTH, gt=0.0)
    memoize: bool = True
    prune: bool = True
    planning_workers: int = Field(1, ge=1)
    wiql_epsilon: Optional[float] = Field(None, ge=0.0, le=1.0)
    gap_rows: Literal["optimistic", "sensitivity"] = "optimistic"
    visit_ties: bool = True

    sweep_key: Optional[str] = Field(None, description="Config key varied across sweep points")
    sweep_values: List[str] = Field(default_factory=list, description="Values taken by sweep_key")

    @field_validator("seeds", mode="before")
    @classmethod
    def parse_seeds(cls, v):
        """Accept ``a-b`` ranges and comma lists."""
        if isinstance(v, str):
            seeds = []
            for part in _split_list(v):
                start, sep, stop = part.partition("-")
                if sep and start:
                    seeds.extend(range(int(start), int(stop) + 1))
                else:
                    seeds.append(int(part))
            return seeds
        return v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("at least one seed is required")
        if len(set(v)) != len(v):
            raise ValueError("seeds must be unique")
        return v

    @field_validator("algorithms", mode="before")
    @classmethod
    def parse_algorithms(cls, v):
        return _split_list(v)

    @field_validator("algorithms")
    @classmethod
    def validate_algorithms(cls, v: List[str]) -> List[str]:
        unknown = [name for name in v if name not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        if not v:
            raise ValueError("at least one algorithm is required")
        return list(dict.fromkeys(v))

    @field_validator("sweep_values", mode="before")
    @classmethod
    def parse_sweep_values(cls, v):
        return [str(item) for item in _split_list(v)]

    @field_validator(
        "dataset_path", "output_dir", "epsilon_override", "wiql_epsilon", "sweep_key", "timesteps", mode="before"
    )
    @classmethod
    def blank_is_none(cls, v):
        if isinstance(v, str) and v.strip().lower() in ("", "none"):
            return None
        return v

    @model_validator(mode="after")
    def check_consistency(self) -> "ExperimentConfig":
        if self.budget > self.num_arms:
            raise ValueError(f"budget K={self.budget} exceeds num_arms N={self.num_arms}")
        if self.domain == "dataset" and not self.dataset_path:
            raise ValueError("dataset_path is required when domain = dataset")
        if self.timesteps is not None:
            if self.timesteps < self.horizon:
                raise ValueError(f"timesteps={self.timesteps} is shorter than one episode of H={self.horizon}")
            self.episodes = self.timesteps // self.horizon
        if self.sweep_key is not None:
            if self.sweep_key not in self.known_keys() or self.field_name(self.sweep_key).startswith("sweep_"):
                raise ValueError(f"sweep_key '{self.sweep_key}' is not a sweepable config key")
            if not self.sweep_values:
                raise ValueError("sweep_values is required when sweep_key is set")
            if len(set(self.sweep_values)) != len(self.sweep_values):
                raise ValueError("sweep_values must be unique")
            # every point must validate on its own
            self.sweep_points()
        elif self.sweep_values:
            raise ValueError("sweep_values given without sweep_key")
        return self

    @classmethod
    def field_name(cls, key: str) -> str:
        """Field behind a config key or one of its short aliases."""
        for name, field in cls.model_fields.items():
            alias = field.validation_alias
            if key == name or (isinstance(alias, AliasChoices) and key in alias.choices):
                return name
        raise KeyError(key)

    def sweep_points(self) -> List[Tuple[str, "ExperimentConfig"]]:
        """One ``(value, config)`` pair per sweep value, or ``[("", self)]`` without a sweep."""
        if self.sweep_key is None:
            return [("", self)]
        name = self.field_name(self.sweep_key)
        base = self.model_dump(exclude={"sweep_key", "sweep_values"})
        points = []
        for value in self.sweep_values:
            try:
                points.append((value, ExperimentConfig.model_validate({**base, name: value})))
            except ValidationError as e:
                message = "; ".join(error["msg"] for error in e.errors())
                raise ValueError(f"sweep point {self.sweep_key}={value}: {message}") from None
        return points

    @classmethod
    def known_keys(cls) -> Set[str]:
        """Every accepted config key, field names and short aliases."""
        keys = set()
        for name, field in cls.model_fields.items():
            keys.add(name)
            alias = field.validation_alias
            if isinstance(alias, AliasChoices):
                keys.update(choice for choice in alias.choices if isinstance(choice, str))
        return keys

    def learner_config(self) -> LearnerConfig:
        """Learner knobs carried by this experiment."""
        return LearnerConfig(
            gamma=self.gamma,
            delta=self.delta,
            solver_tol=self.solver_tol,
            index_width=self.index_width,
            memoize=self.memoize,
            prune=self.prune,
            planning_workers=self.planning_workers,
            wiql_epsilon=self.wiql_epsilon,
            gap_rows=self.gap_rows,
            visit_ties=self.visit_ties,
        )

    def population_seed_for(self, seed: int) -> int:
        """Seed that draws the arm population for an experiment seed."""
        return seed if self.resample_population else self.population_seed


class CliInvocation(BaseModel):
    """A parsed command line."""

    subcommand: Literal["run", "whittle", "gen", "diag"]
    config_path: Optional[str] = None
    overrides: List[str] = Field(default_factory=list)
    output_dir: Optional[str] = None
    verbosity: int = Field(0, ge=0)

    @field_validator("overrides")
    @classmethod
    def validate_override_keys(cls, v: List[str]) -> List[str]:
        known = ExperimentConfig.known_keys()
        for pair in v:
            key = pair.partition("=")[0].strip()
            if key not in known:
                raise ValueError(f"override references unknown key '{key}'")
        return v
