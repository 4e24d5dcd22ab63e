"""Run configuration: a YAML file with one section per concern.

Example (damage model, reference training setup)::

    model:
      family: damage
      stiffness_mpa_per_mm: 5.0
      initiation_mpa_mm: 0.1
      hardening_h1_mpa_mm: 2.0
      hardening_h2_per_mm: 100.0
    network:
      hidden_layers: 5
      width: 100
      activation: relu
    training:
      learning_rate: 1.0e-4
      epochs: 1000
      batch_size: 500
      seed: 7
      switch: relu          # relu | swish
      sign: hard            # hard | sigmoid | sym_sigmoid
      smoothing_r: 300.0
      weights: {ue: 1, ux: 1, ev: 1, yl: 1, ke: 1, ky: 1}
    collocation:
      gap: [0.0, 0.02, 1.0]       # [begin, step, end]
      damage: [0.0, 0.02, 1.0]
    paths:
      test: "1.0*abs(t*sin(3*pi*t))"
      steps: 50
    output_dir: out

Key names carry their units.  Everything is validated before any work
starts; a bad value raises :class:`ConfigError` naming the key.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import yaml

from .collocation import (
    gen_collocation_cz3d,
    gen_collocation_damage,
    gen_collocation_plastic,
)
from .errors import ConfigError
from .losses import LossWeights
from .materials import Cz3dParams, DamageParams, PlasticityParams
from .network import TrainingConfig

__all__ = ["RunConfig", "load_run_config", "resolve_output_dir"]

FAMILIES = ("plasticity", "damage", "cz3d")

OUTPUT_DIR_ENV = "CONLAB_OUT_DIR"


@dataclass
class RunConfig:
    """Validated bundle of everything the CLI workflows need."""

    family: str
    material: object
    hidden_layers: int
    width: int
    activation: str
    training: TrainingConfig
    weights: LossWeights
    switch: str
    sign_mode: str
    collocation_ranges: dict
    test_path: object
    path_steps: int
    output_dir: Path
    raw: dict

    def collocation(self):
        """Generate the collocation set configured for this family."""
        r = self.collocation_ranges
        if self.family == "plasticity":
            return gen_collocation_plastic(r["strain"], r["plastic_strain"],
                                           r["accumulated"])
        if self.family == "damage":
            return gen_collocation_damage(r["gap"], r["damage"])
        return gen_collocation_cz3d(r["gap_s1"], r["gap_s2"], r["gap_n"], r["damage"])


def _section(cfg, name, required=True):
    value = cfg.get(name)
    if value is None:
        if required:
            raise ConfigError(f"missing config section '{name}'")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section '{name}' must be a mapping")
    return value


def _number(section, key, default=None, positive=False):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing config key '{key}'")
        return default
    value = section[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"config key '{key}' must be a number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"config key '{key}' must be positive, got {value}")
    return float(value)


def _range(section, key, default):
    value = section.get(key, default)
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"config key '{key}' must be [begin, step, end]")
    return tuple(float(v) for v in value)


def _parse_material(model_cfg):
    family = model_cfg.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"model.family must be one of {FAMILIES}, got {family!r}")
    try:
        if family == "plasticity":
            return family, PlasticityParams(
                E=_number(model_cfg, "stiffness_mpa", positive=True),
                sigma_y0=_number(model_cfg, "yield_stress_mpa", positive=True),
                h1=_number(model_cfg, "hardening_h1_mpa"),
                h2=_number(model_cfg, "hardening_h2"),
            )
        if family == "damage":
            return family, DamageParams(
                K=_number(model_cfg, "stiffness_mpa_per_mm", positive=True),
                Y0=_number(model_cfg, "initiation_mpa_mm", positive=True),
                h1=_number(model_cfg, "hardening_h1_mpa_mm"),
                h2=_number(model_cfg, "hardening_h2_per_mm"),
            )
        return family, Cz3dParams(
            K_s1=_number(model_cfg, "shear1_stiffness_mpa_per_mm", positive=True),
            K_s2=_number(model_cfg, "shear2_stiffness_mpa_per_mm", positive=True),
            K_n=_number(model_cfg, "normal_stiffness_mpa_per_mm", positive=True),
            Y0=_number(model_cfg, "initiation_mpa_mm", positive=True),
            h1=_number(model_cfg, "hardening_h1_mpa_mm"),
            h2=_number(model_cfg, "hardening_h2_per_mm"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid material parameters: {exc}") from exc


def _parse_collocation(family, coll_cfg):
    if family == "plasticity":
        return {
            "strain": _range(coll_cfg, "strain", (0.0, 0.01, 1.0)),
            "plastic_strain": _range(coll_cfg, "plastic_strain", (0.0, 0.01, 1.0)),
            "accumulated": _range(coll_cfg, "accumulated", (0.0, 0.01, 1.0)),
        }
    if family == "damage":
        return {
            "gap": _range(coll_cfg, "gap", (0.0, 0.02, 1.0)),
            "damage": _range(coll_cfg, "damage", (0.0, 0.02, 1.0)),
        }
    return {
        "gap_s1": _range(coll_cfg, "gap_s1", (0.0, 0.1, 1.0)),
        "gap_s2": _range(coll_cfg, "gap_s2", (0.0, 0.1, 1.0)),
        "gap_n": _range(coll_cfg, "gap_n", (0.0, 0.1, 1.0)),
        "damage": _range(coll_cfg, "damage", (0.0, 0.1, 1.0)),
    }


def load_run_config(path):
    """Load and fully validate a YAML run configuration."""
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a YAML mapping")

    family, material = _parse_material(_section(cfg, "model"))

    net_cfg = _section(cfg, "network", required=False)
    hidden_layers = int(_number(net_cfg, "hidden_layers", default=5, positive=True))
    width = int(_number(net_cfg, "width", default=100, positive=True))
    activation = net_cfg.get("activation", "relu")
    if activation not in ("relu", "tanh", "sigmoid", "softplus", "swish"):
        raise ConfigError(f"network.activation {activation!r} is not supported")

    tr_cfg = _section(cfg, "training", required=False)
    weights_cfg = tr_cfg.get("weights", {}) or {}
    if not isinstance(weights_cfg, dict):
        raise ConfigError("training.weights must be a mapping of term -> weight")
    unknown = set(weights_cfg) - {"ue", "ux", "ev", "yl", "ke", "ky"}
    if unknown:
        raise ConfigError(f"unknown loss-weight keys {sorted(unknown)}")
    try:
        weights = LossWeights(**{k: float(v) for k, v in weights_cfg.items()})
        training = TrainingConfig(
            learning_rate=_number(tr_cfg, "learning_rate", default=1e-4, positive=True),
            epochs=int(_number(tr_cfg, "epochs", default=1000)),
            batch_size=int(_number(tr_cfg, "batch_size", default=500, positive=True)),
            seed=int(_number(tr_cfg, "seed", default=0)),
            smoothing_r=_number(tr_cfg, "smoothing_r", default=300.0, positive=True),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid training settings: {exc}") from exc
    switch = tr_cfg.get("switch", "relu")
    if switch not in ("relu", "swish"):
        raise ConfigError(f"training.switch must be 'relu' or 'swish', got {switch!r}")
    sign_mode = tr_cfg.get("sign", "hard")
    if sign_mode not in ("hard", "sigmoid", "sym_sigmoid"):
        raise ConfigError(f"training.sign must be hard/sigmoid/sym_sigmoid, got {sign_mode!r}")

    collocation_ranges = _parse_collocation(family, _section(cfg, "collocation",
                                                             required=False))

    paths_cfg = _section(cfg, "paths", required=False)
    test_path = paths_cfg.get("test")
    if test_path is None:
        test_path = ({"components": ["0.5*t**3", "0.5*t**2", "0.5*abs(t*sin(3*pi*t))"]}
                     if family == "cz3d" else "1.0*abs(t*sin(3*pi*t))")
    path_steps = int(_number(paths_cfg, "steps", default=50, positive=True))

    output_dir = Path(cfg.get("output_dir", "out"))
    return RunConfig(
        family=family, material=material, hidden_layers=hidden_layers,
        width=width, activation=activation, training=training, weights=weights,
        switch=switch, sign_mode=sign_mode, collocation_ranges=collocation_ranges,
        test_path=test_path, path_steps=path_steps, output_dir=output_dir, raw=cfg,
    )


def resolve_output_dir(run_cfg=None, flag_value=None):
    """Output directory priority: --out flag, then environment, then config."""
    if flag_value:
        out = Path(flag_value)
    elif os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV])
    elif run_cfg is not None:
        out = run_cfg.output_dir
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out
