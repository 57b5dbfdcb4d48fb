"""
Validated configuration models and the flat key=value config file format.

Every model is a frozen pydantic model. Use ``build`` to construct one from
loosely typed input (config-file strings, CLI flags); it turns pydantic's
ValidationError into a ConfigError that names the offending field.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Literal, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import DataFileError, ConfigError

SHARE_TOLERANCE = 1e-9
MAX_SEED = 2**64 - 1

PIPELINE_KEYS = ("tau", "sigma_min", "n_min", "clip", "eps", "capital")
WINDOW_KEYS = ("entry_period", "exit_period")
RUN_KEYS = (
    "seed", "method", "samples", "chains", "k", "sample_per_cluster",
    "use_bsearch", "workers", "policy", "pot", "alpha",
)
KNOWN_KEYS = frozenset(PIPELINE_KEYS + WINDOW_KEYS + RUN_KEYS)

DEFAULT_SEGMENTS = {"urban": 0.5, "suburban": 0.3, "rural": 0.2}

M = TypeVar("M", bound=BaseModel)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PipelineConfig(_Frozen):
    tau: float = Field(2.0, gt=0)
    sigma_min: float = Field(0.05, gt=0)
    n_min: int = Field(3, ge=1)
    clip: float = Field(1.0, gt=0)
    eps: float = Field(1.0, gt=0)
    capital: float = Field(1.0, gt=0)


class GenSpec(_Frozen):
    n_members: int = Field(8, ge=1)
    n_periods: int = Field(4, ge=2)
    n_carriers: int = Field(2, ge=0)
    carrier_strength: float = Field(0.5, gt=0)
    noise_scale: float = Field(0.1, ge=0)
    segments: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_SEGMENTS))
    seed: int = Field(0, ge=0, le=MAX_SEED)
    n_companies: int = Field(4, ge=1)
    n_insiders: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_counts(self):
        if self.n_carriers > self.n_members:
            raise ValueError("n_carriers: must not exceed n_members")
        if self.n_insiders > self.n_members - self.n_carriers:
            raise ValueError("n_insiders: insiders are drawn from non-carriers only")
        check_shares("segments", self.segments)
        return self


class PayoutPolicy(_Frozen):
    kind: Literal["direct", "nonneg_proportional", "volume_blend"] = "direct"
    pot: float = 0.0
    alpha: float = Field(0.5, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_pot(self):
        if self.kind != "direct" and self.pot < 0:
            raise ValueError("pot: must be nonnegative for proportional policies")
        return self


Method = Literal["exact", "permutation", "stratified", "cluster"]

METHOD_ALIASES = {
    "exact": "exact",
    "perm": "permutation",
    "permutation": "permutation",
    "strat": "stratified",
    "stratified": "stratified",
    "cluster": "cluster",
    "clustered": "cluster",
}


class RunConfig(_Frozen):
    data_dir: Path
    config_path: Optional[Path] = None
    seed: Optional[int] = Field(None, ge=0, le=MAX_SEED)
    method: Method = "stratified"
    samples: int = Field(1000, ge=1)
    chains: int = Field(200, ge=1)
    k: int = Field(2, ge=1)
    sample_per_cluster: int = Field(2, ge=1)
    use_bsearch: bool = True
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check_seed(self):
        if self.method != "exact" and self.seed is None:
            raise ValueError(f"seed: required for the {self.method} method")
        return self


def check_shares(name: str, shares: Dict[str, float]):
    for segment, share in shares.items():
        if not 0.0 < share <= 1.0:
            raise ValueError(f"{name}: share of {segment!r} must lie in (0, 1]")
    total = sum(shares.values())
    if abs(total - 1.0) > SHARE_TOLERANCE:
        raise ValueError(f"{name}: shares sum to {total!r}, expected 1")


def build(model: Type[M], **values) -> M:
    """Construct ``model`` from ``values``, dropping None entries so model defaults apply."""
    values = {key: value for key, value in values.items() if value is not None}
    try:
        return model(**values)
    except ValidationError as exc:
        error = exc.errors()[0]
        message = error["msg"].removeprefix("Value error, ")
        location = ".".join(str(part) for part in error["loc"])
        if not location and ":" in message:
            location, message = (part.strip() for part in message.split(":", 1))
        raise ConfigError(location or model.__name__, message) from exc


@dataclass(frozen=True)
class ConfigFile:
    values: Dict[str, str] = field(default_factory=dict)
    target_shares: Dict[str, float] = field(default_factory=dict)

    def pick(self, keys) -> Dict[str, str]:
        return {key: self.values[key] for key in keys if key in self.values}

    def pipeline(self, **overrides) -> PipelineConfig:
        return build(PipelineConfig, **{**self.pick(PIPELINE_KEYS), **overrides})

    def window(self):
        missing = [key for key in WINDOW_KEYS if key not in self.values]
        if missing:
            raise ConfigError(missing[0], "missing from the config file")
        try:
            return int(self.values["entry_period"]), int(self.values["exit_period"])
        except ValueError as exc:
            raise ConfigError("entry_period/exit_period", "must be integers") from exc


def parse_config_text(text: str, path="<config>") -> ConfigFile:
    values: Dict[str, str] = {}
    shares: Dict[str, float] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFileError(path, f"expected key=value, got {raw!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in KNOWN_KEYS:
            values[key] = value
            continue
        try:
            shares[key] = float(value)
        except ValueError:
            raise DataFileError(path, f"share for segment {key!r} is not a number", line=number)
    return ConfigFile(values=values, target_shares=shares)


def load_config_file(path) -> ConfigFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFileError(path, f"cannot read config file ({exc.strerror})") from exc
    return parse_config_text(text, path)


def format_config(pipeline: PipelineConfig, entry_period: int, exit_period: int,
                  target_shares: Dict[str, float], extra: Optional[Dict[str, object]] = None) -> str:
    lines = [f"{key}={getattr(pipeline, key)!r}" for key in PIPELINE_KEYS]
    lines.append(f"entry_period={entry_period}")
    lines.append(f"exit_period={exit_period}")
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    for segment in sorted(target_shares):
        lines.append(f"{segment}={target_shares[segment]!r}")
    return "\n".join(lines) + "\n"


def write_config_file(path, pipeline: PipelineConfig, entry_period: int, exit_period: int,
                      target_shares: Dict[str, float], extra: Optional[Dict[str, object]] = None) -> Path:
    path = Path(path)
    path.write_text(format_config(pipeline, entry_period, exit_period, target_shares, extra))
    return path
