"""Experiment configuration: one JSON document, individual fields overridable from the command line."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .algebra import ThetaMatrix, TorusElement
from .connections import Connection, InvalidConnectionError
from .dirac import FluctuationA, FluctuationError
from .representation import SpinStructure

CONFIG_SCHEMA = "nctorus.config/1"
EXPERIMENTS = ("verify-axioms", "decompose", "spectrum", "connection-scan", "nc-integral", "hopf-galois")
# fractional parts of the golden ratio, sqrt 2 and sqrt 3
DEFAULT_THETA = ThetaMatrix(0.6180339887498949, 0.41421356237309515, 0.7320508075688772)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    theta: ThetaMatrix = DEFAULT_THETA
    window: int = 8
    spin: SpinStructure = SpinStructure()
    A: FluctuationA | None = None
    omega: Connection | None = None
    ell: float = 1.0
    experiment: str | None = None
    out: str | None = None
    seed: int = 0
    cutoffs: tuple[float, ...] | None = None

    def integral_cutoffs(self) -> tuple[float, ...]:
        """Cut-offs for integral estimates; scaled from ``(5, 7, 9, 11)`` at ``N = 12``."""
        if self.cutoffs is not None:
            return self.cutoffs
        return tuple(round(self.window * c / 12.0, 6) for c in (5.0, 7.0, 9.0, 11.0))

    def to_json(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "theta": self.theta.to_json(),
            "window": self.window,
            "spin": self.spin.to_json(),
            "A": None if self.A is None else {k: v for k, v in zip(("A1", "A2", "A3"), _strip(self.A.components))},
            "omega": None if self.omega is None else dict(zip(("omega1", "omega2"),
                                                              _strip((self.omega.omega1, self.omega.omega2)))),
            "ell": self.ell,
            "experiment": self.experiment,
            "out": self.out,
            "seed": self.seed,
            "cutoffs": None if self.cutoffs is None else list(self.cutoffs),
        }


def _strip(elements):
    return [{"coeffs": e.to_json()["coeffs"]} for e in elements]


def _real(value, where: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected a real number, got {value!r}") from exc
    if not math.isfinite(x):
        raise ConfigError(f"{where}: must be finite")
    return x


def _element(data, theta: ThetaMatrix, where: str) -> TorusElement:
    try:
        return TorusElement.from_json(data, theta)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_theta(data: Any) -> ThetaMatrix:
    if not isinstance(data, Mapping):
        raise ConfigError("theta: expected an object with t21, t31, t32")
    missing = [k for k in ("t21", "t31", "t32") if k not in data]
    if missing:
        raise ConfigError(f"theta: missing {', '.join(missing)}")
    return ThetaMatrix(*(_real(data[k], f"theta.{k}") for k in ("t21", "t31", "t32")))


def parse_spin(value: Any) -> SpinStructure:
    try:
        if isinstance(value, str):
            return SpinStructure.parse(value)
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return SpinStructure(*(_real(v, "spin") for v in value))
    except ValueError as exc:
        raise ConfigError(f"spin: {exc}") from exc
    raise ConfigError(f"spin: expected two offsets, got {value!r}")


def parse_window(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"window: expected a positive integer, got {value!r}")
    try:
        n = int(value)
    except ValueError as exc:
        raise ConfigError(f"window: expected a positive integer, got {value!r}") from exc
    if n != float(value) or n < 1:
        raise ConfigError(f"window: expected a positive integer, got {value!r}")
    return n


def parse_seed(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(f"seed: expected a non-negative integer, got {value!r}")
    try:
        n = int(value)
    except ValueError as exc:
        raise ConfigError(f"seed: expected a non-negative integer, got {value!r}") from exc
    if n < 0:
        raise ConfigError("seed: must be non-negative")
    return n


def parse_ell(value: Any) -> float:
    ell = _real(value, "ell")
    if ell <= 0:
        raise ConfigError("ell: fibre length must be positive")
    return ell


def parse_config(data: Mapping, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Validate a config document; ``overrides`` (already typed or raw) replace fields before element parsing."""
    if not isinstance(data, Mapping):
        raise ConfigError("config: expected a JSON object")
    data = dict(data)
    schema = data.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError(f"schema: unsupported {schema!r}, expected {CONFIG_SCHEMA!r}")
    known = {"theta", "window", "spin", "A", "omega", "ell", "experiment", "out", "seed", "cutoffs"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"config: unknown field(s) {', '.join(unknown)}")
    overrides = dict(overrides or {})

    theta = parse_theta(data["theta"]) if "theta" in data else DEFAULT_THETA
    t = dict(zip(("t21", "t31", "t32"), (theta.theta21, theta.theta31, theta.theta32)))
    for key in ("t21", "t31", "t32"):
        if overrides.get(key) is not None:
            t[key] = _real(overrides[key], f"--theta{key[1:]}")
    theta = ThetaMatrix(t["t21"], t["t31"], t["t32"])

    def pick(name, default):
        v = overrides.get(name)
        return v if v is not None else data.get(name, default)

    cfg = ExperimentConfig(
        theta=theta,
        window=parse_window(pick("window", 8)),
        spin=parse_spin(pick("spin", [0, 0])),
        ell=parse_ell(pick("ell", 1.0)),
        out=pick("out", None),
        seed=parse_seed(pick("seed", 0)),
        experiment=pick("experiment", None),
    )
    if cfg.experiment is not None and cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown {cfg.experiment!r}")

    A = None
    if data.get("A") is not None:
        raw = data["A"]
        if not isinstance(raw, Mapping):
            raise ConfigError("A: expected an object with A1, A2, A3")
        comps = []
        for key in ("A1", "A2", "A3"):
            comps.append(_element(raw[key], theta, f"A.{key}") if key in raw else TorusElement.zero(theta))
        try:
            A = FluctuationA(*comps)
        except FluctuationError as exc:
            raise ConfigError(f"A: {exc}") from exc

    omega = None
    if data.get("omega") is not None:
        raw = data["omega"]
        if not isinstance(raw, Mapping):
            raise ConfigError("omega: expected an object with omega1, omega2")
        comps = [_element(raw[k], theta, f"omega.{k}") if k in raw else TorusElement.zero(theta)
                 for k in ("omega1", "omega2")]
        try:
            omega = Connection(*comps)
        except InvalidConnectionError as exc:
            raise ConfigError(f"omega: {exc}") from exc

    cutoffs = None
    if data.get("cutoffs") is not None:
        raw = data["cutoffs"]
        if not isinstance(raw, list) or len(raw) < 4:
            raise ConfigError("cutoffs: expected a list of at least four radii")
        cutoffs = tuple(sorted(_real(c, f"cutoffs[{i}]") for i, c in enumerate(raw)))
        if cutoffs[0] <= 0 or cutoffs[-1] > cfg.window:
            raise ConfigError("cutoffs: radii must lie in (0, window]")
    return replace(cfg, A=A, omega=omega, cutoffs=cutoffs)


def load_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    if path is None:
        return parse_config({}, overrides)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(data, overrides)
