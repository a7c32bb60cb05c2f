"""Declarative simulation scenarios and their YAML file format.

A scenario file is a YAML mapping whose keys mirror :class:`ScenarioSpec`.
An optional ``sweep`` mapping expands one file into the cartesian product of
the listed values (dotted keys address nested sections, e.g.
``noise.phi``), and an optional ``paper_scale`` mapping lists overrides
applied when the caller asks for paper-scale runs. A free-text
``description`` is ignored. Any other unknown key is an error.

Example::

    id: gamma-L2-M32
    components: [bumps, doppler]
    M: 32
    N: 50
    snr: 7
    replications: 25
    seed: 1
    estimator: gamma-bayes
    noise: {family: gamma, shape: 2.0}
    prior: {p: 0.75, tau: 5.0}
    sampler: {iterations: 5000}
    sweep:
      snr: [3, 7]
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ScenarioError
from .noise import NOISE_FAMILIES
from .ram import RamConfig
from .shrinkage import PriorConfig
from .signals import DEFAULT_SD, SIGNALS
from .wavelets import FILTERS, TransformPlan

__all__ = [
    "ESTIMATORS",
    "NoiseConfig",
    "PriorSection",
    "SamplerSection",
    "WaveletSection",
    "WeightSection",
    "ScenarioSpec",
    "scenario_from_dict",
    "load_scenarios",
    "expand_document",
]

ESTIMATORS = ("gamma-bayes", "correlated-bayes", "universal-threshold", "identity")


@dataclass(frozen=True)
class NoiseConfig:
    family: str = "normal"
    shape: float = 2.0
    phi: float | None = None
    d: float | None = None
    truncation_Q: int = 100
    sd_override: float | None = None
    snr_reference: str = "innovation"

    def __post_init__(self):
        if self.snr_reference not in ("marginal", "innovation"):
            raise ScenarioError(
                f"noise.snr_reference: must be 'marginal' or 'innovation', got {self.snr_reference!r}"
            )
        if self.family not in NOISE_FAMILIES:
            raise ScenarioError(f"noise.family: unknown family {self.family!r}; choose from {NOISE_FAMILIES}")
        if self.family == "ar1" and self.phi is None:
            raise ScenarioError("noise.phi is required for the ar1 family")
        if self.family == "arfima" and self.d is None:
            raise ScenarioError("noise.d is required for the arfima family")

    def label(self) -> str:
        if self.family == "ar1":
            return f"AR(1) phi={self.phi:g}"
        if self.family == "arfima":
            return f"ARFIMA(0,{self.d:g},0)"
        return self.family


@dataclass(frozen=True)
class PriorSection:
    """``p: null`` selects the level rule ``p(j)`` with exponent ``h``."""

    p: float | None = None
    h: float = 2.0
    tau: float = 5.0
    spike_scale_fraction: float = 1e-4

    def config(self) -> PriorConfig:
        return PriorConfig(p=self.p, h=self.h, tau=self.tau)


@dataclass(frozen=True)
class SamplerSection:
    iterations: int = 5000
    target_acceptance: float = 0.234
    zeta: float = 2.0 / 3.0
    initial_scale: float | None = None
    burn_in: float = 0.2
    thin: int = 10
    adapt: bool = True

    def config(self, seed: int = 0) -> RamConfig:
        return RamConfig(seed=seed, **dataclasses.asdict(self))


@dataclass(frozen=True)
class WaveletSection:
    filter: str = "db8"
    J0: int = 3


@dataclass(frozen=True)
class WeightSection:
    rule: str = "dirichlet"
    concentration: float = 1.0

    def __post_init__(self):
        if self.rule != "dirichlet":
            raise ScenarioError(f"weights.rule: only 'dirichlet' is supported, got {self.rule!r}")
        if not self.concentration > 0:
            raise ScenarioError("weights.concentration must be positive")


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    components: tuple[str, ...]
    M: int
    N: int
    snr: float
    estimator: str
    replications: int = 25
    seed: int = 0
    component_sd: float | None = DEFAULT_SD
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    prior: PriorSection = field(default_factory=PriorSection)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    wavelet: WaveletSection = field(default_factory=WaveletSection)
    weights: WeightSection = field(default_factory=WeightSection)

    def __post_init__(self):
        if not self.components:
            raise ScenarioError("components: need at least one component")
        for name in self.components:
            if name not in SIGNALS:
                raise ScenarioError(f"components: unknown test signal {name!r}; valid: {sorted(SIGNALS)}")
        if self.estimator not in ESTIMATORS:
            raise ScenarioError(f"estimator: unknown tag {self.estimator!r}; choose from {ESTIMATORS}")
        if self.replications < 1:
            raise ScenarioError("replications must be >= 1")
        if self.N < len(self.components):
            raise ScenarioError(f"N={self.N} must be at least L={len(self.components)}")
        if not self.snr > 0:
            raise ScenarioError("snr must be positive")
        if self.wavelet.filter not in FILTERS:
            raise ScenarioError(f"wavelet.filter: unknown filter {self.wavelet.filter!r}")
        try:
            self.plan()
        except ValueError as exc:
            raise ScenarioError(f"M / wavelet.J0: {exc}") from None

    @property
    def L(self) -> int:
        return len(self.components)

    def plan(self) -> TransformPlan:
        return TransformPlan(self.M, self.wavelet.J0, self.wavelet.filter)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["components"] = list(self.components)
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def data_fields(self) -> dict:
        """Fields that determine the generated data (everything but the estimator)."""
        d = self.to_dict()
        for key in ("id", "estimator", "prior", "sampler"):
            d.pop(key)
        return d

    def replace(self, **changes) -> "ScenarioSpec":
        return dataclasses.replace(self, **changes)


_SECTIONS = {
    "noise": NoiseConfig,
    "prior": PriorSection,
    "sampler": SamplerSection,
    "wavelet": WaveletSection,
    "weights": WeightSection,
}
_TOP = {f.name for f in dataclasses.fields(ScenarioSpec)}
_REQUIRED = ("id", "components", "M", "N", "snr", "estimator")


def _build_section(name: str, cls, raw) -> Any:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{name}: expected a mapping, got {type(raw).__name__}")
    allowed = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in allowed:
            raise ScenarioError(f"{name}.{key}: unknown key (allowed: {sorted(allowed)})")
    try:
        return cls(**raw)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{name}: {exc}") from None


def scenario_from_dict(raw: dict) -> ScenarioSpec:
    """Validate a plain mapping and build a :class:`ScenarioSpec`."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario document must be a mapping")
    for key in raw:
        if key not in _TOP:
            raise ScenarioError(f"{key}: unknown key (allowed: {sorted(_TOP)})")
    for key in _REQUIRED:
        if key not in raw:
            raise ScenarioError(f"{key}: required field is missing")
    kwargs = dict(raw)
    for name, cls in _SECTIONS.items():
        if name in kwargs:
            kwargs[name] = _build_section(name, cls, kwargs[name] or {})
    comps = kwargs["components"]
    if isinstance(comps, str) or not isinstance(comps, (list, tuple)):
        raise ScenarioError("components: expected a list of test-signal names")
    kwargs["components"] = tuple(comps)
    for key, typ in (("M", int), ("N", int), ("replications", int), ("seed", int)):
        if key in kwargs and (not isinstance(kwargs[key], int) or isinstance(kwargs[key], bool)):
            raise ScenarioError(f"{key}: expected an integer, got {kwargs[key]!r}")
    try:
        return ScenarioSpec(**kwargs)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None


def _set_dotted(doc: dict, key: str, value) -> None:
    parts = key.split(".")
    node = doc
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ScenarioError(f"sweep.{key}: {part} is not a section")
    node[parts[-1]] = value


def _suffix(key: str, value) -> str:
    leaf = key.split(".")[-1]
    if isinstance(value, bool) or value is None:
        return f"{leaf}-{value}"
    if isinstance(value, (int, float)):
        return f"{leaf}{value:g}"
    if isinstance(value, (list, tuple)):
        return f"L{len(value)}"
    if isinstance(value, dict):
        if "family" in value:
            cfg = {k: v for k, v in value.items() if k in ("family", "phi", "d")}
            return "-".join(f"{v:g}" if isinstance(v, (int, float)) else str(v) for v in cfg.values())
        return "-".join(f"{k}{v}" for k, v in sorted(value.items()))
    return f"{leaf}-{value}"


def expand_document(doc: dict, paper_scale: bool = False) -> list[ScenarioSpec]:
    """Expand a parsed document (with optional ``sweep``) into scenarios."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    doc = copy.deepcopy(doc)
    doc.pop("description", None)
    sweep = doc.pop("sweep", None) or {}
    overrides = doc.pop("paper_scale", None) or {}
    if not isinstance(sweep, dict) or not isinstance(overrides, dict):
        raise ScenarioError("sweep and paper_scale must be mappings")
    if paper_scale:
        for key, value in overrides.items():
            _set_dotted(doc, key, value)
    keys = list(sweep)
    for key in keys:
        if not isinstance(sweep[key], list) or not sweep[key]:
            raise ScenarioError(f"sweep.{key}: expected a non-empty list")
    specs = []
    for combo in itertools.product(*(sweep[k] for k in keys)):
        inst = copy.deepcopy(doc)
        for key, value in zip(keys, combo):
            _set_dotted(inst, key, value)
        if keys:
            inst["id"] = "-".join([str(doc.get("id", "scenario"))] + [_suffix(k, v) for k, v in zip(keys, combo)])
        specs.append(scenario_from_dict(inst))
    return specs


def load_scenarios(path: str | Path, paper_scale: bool = False) -> list[ScenarioSpec]:
    """Read a YAML scenario file."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML: {exc}") from None
    return expand_document(doc, paper_scale=paper_scale)
