"""YAML experiment configs.

Example::

    domain:
      kind: box             # box | ball | polytope
      bounds: [[-1, 1], [-1, 1]]
    adversary:
      kind: iid_linear      # iid_linear | alternating | piecewise_linear | fixed_quadratic
      params: {radius: 1.0}
    learner:
      - kind: ip
      - kind: ftl
    horizon: 4096
    seed: 0
    x1: [0.0, 0.0]          # optional for box and ball
    sweep:                  # only read by `sweep`
      horizons: [256, 1024, 4096]
      seeds: [0, 1, 2]

Domain keys: ``bounds`` (or ``lower``/``upper``) for boxes, ``center`` and
``radius`` for balls, ``A`` and ``b`` for ``{x | Ax >= b}``. Adversary
parameters are documented on :class:`losses.AdversaryScript`; piecewise
segments are ``[length, c]`` pairs or ``{fraction: f, c: [...]}`` mappings.
Learner entries accept ``name``, ``eta``, ``grad_bound``, ``theta``,
``diameter``, ``D`` and ``G0`` overrides.
"""
import numpy as np
import yaml

from .barrier import Domain
from .errors import ConfigParse
from .harness import LEARNER_KINDS, ExperimentConfig, LearnerSpec
from .losses import AdversaryScript

LEARNER_KEYS = {"kind", "name", "eta", "grad_bound", "theta", "diameter", "D", "G0", "on_unsafe"}


def _require(mapping, key, prefix):
    if key not in mapping:
        raise ConfigParse(f"{prefix}{key}", "missing required key")
    return mapping[key]


def _array(value, key, ndim):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(key, f"expected numbers: {exc}") from None
    if arr.ndim != ndim or not np.isfinite(arr).all():
        raise ConfigParse(key, f"expected a finite {ndim}-d array")
    return arr


def _int(value, key, minimum):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigParse(key, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigParse(key, f"must be >= {minimum}, got {value}")
    return value


def parse_domain(d):
    if not isinstance(d, dict):
        raise ConfigParse("domain", "expected a mapping")
    kind = _require(d, "kind", "domain.")
    try:
        if kind == "box":
            if "bounds" in d:
                bounds = _array(d["bounds"], "domain.bounds", 2)
                return Domain.box(bounds[:, 0], bounds[:, 1])
            return Domain.box(_array(_require(d, "lower", "domain."), "domain.lower", 1),
                              _array(_require(d, "upper", "domain."), "domain.upper", 1))
        if kind == "ball":
            return Domain.ball(_array(_require(d, "center", "domain."), "domain.center", 1),
                               float(_require(d, "radius", "domain.")))
        if kind == "polytope":
            return Domain.polytope(_array(_require(d, "A", "domain."), "domain.A", 2),
                                   _array(_require(d, "b", "domain."), "domain.b", 1))
    except ConfigParse:
        raise
    except (ValueError, IndexError) as exc:
        raise ConfigParse(f"domain.{kind}", str(exc)) from None
    raise ConfigParse("domain.kind", f"unknown domain kind {kind!r}")


def parse_adversary(a, horizon, seed):
    if not isinstance(a, dict):
        raise ConfigParse("adversary", "expected a mapping")
    kind = _require(a, "kind", "adversary.")
    if kind not in AdversaryScript.KINDS:
        raise ConfigParse("adversary.kind", f"unknown adversary kind {kind!r}")
    params = dict(a.get("params") or {})
    if kind == "piecewise_linear" and "segments" not in params:
        raise ConfigParse("adversary.params.segments", "missing required key")
    if kind == "fixed_quadratic":
        for key in ("Q", "c"):
            if key not in params:
                raise ConfigParse(f"adversary.params.{key}", "missing required key")
    return AdversaryScript(kind, horizon, seed, params)


def parse_config(data):
    """Build ``(ExperimentConfig, sweep)`` from a parsed YAML mapping."""
    if not isinstance(data, dict):
        raise ConfigParse("<root>", "expected a mapping at top level")
    horizon = _int(_require(data, "horizon", ""), "horizon", 2)
    seed = _int(data.get("seed", 0), "seed", 0)
    domain = parse_domain(_require(data, "domain", ""))
    adversary = parse_adversary(_require(data, "adversary", ""), horizon, seed)
    raw_learners = data.get("learner", data.get("learners", [{"kind": "ip"}]))
    if not isinstance(raw_learners, list) or not raw_learners:
        raise ConfigParse("learner", "expected a non-empty list")
    learners = []
    for i, entry in enumerate(raw_learners):
        if isinstance(entry, str):
            entry = {"kind": entry}
        kind = entry.get("kind")
        if kind not in LEARNER_KINDS:
            raise ConfigParse(f"learner[{i}].kind", f"expected one of {LEARNER_KINDS}, got {kind!r}")
        unknown = set(entry) - LEARNER_KEYS
        if unknown:
            raise ConfigParse(f"learner[{i}].{sorted(unknown)[0]}", "unknown key")
        learners.append(LearnerSpec(kind, {k: v for k, v in entry.items() if k != "kind"}))
    x1 = data.get("x1")
    if x1 is not None:
        x1 = _array(x1, "x1", 1)
        if x1.shape != (domain.dim,):
            raise ConfigParse("x1", f"expected {domain.dim} coordinates")
        if not domain.is_interior(x1):
            raise ConfigParse("x1", "start point must be strictly interior")
    elif domain.kind == "polytope":
        raise ConfigParse("x1", "polytope domains need an explicit interior start point")
    try:
        cfg = ExperimentConfig(
            domain, adversary, tuple(learners), horizon, seed, x1,
            theta=data.get("theta"), diameter=data.get("diameter"), out_dir=data.get("out"),
        )
    except ValueError as exc:
        raise ConfigParse("learner", str(exc)) from None
    sweep = data.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict):
            raise ConfigParse("sweep", "expected a mapping")
        for key in ("horizons", "seeds"):
            vals = sweep.get(key)
            if not isinstance(vals, list) or not vals:
                raise ConfigParse(f"sweep.{key}", "expected a non-empty list")
            minimum = 2 if key == "horizons" else 0
            for v in vals:
                _int(v, f"sweep.{key}", minimum)
    return cfg, sweep


def load_config(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigParse("<file>", f"invalid YAML: {exc}") from None
    return parse_config(data)


def config_to_dict(cfg, sweep=None):
    out = {
        "domain": cfg.domain.to_dict(),
        "adversary": cfg.adversary.to_dict(),
        "learner": [{"kind": s.kind, **s.params} for s in cfg.learners],
        "horizon": cfg.horizon,
        "seed": cfg.seed,
    }
    if cfg.x1 is not None:
        out["x1"] = np.asarray(cfg.x1, dtype=float).tolist()
    if cfg.theta is not None:
        out["theta"] = cfg.theta
    if cfg.diameter is not None:
        out["diameter"] = cfg.diameter
    if sweep is not None:
        out["sweep"] = sweep
    return out


def dump_config(cfg, sweep=None):
    return yaml.safe_dump(config_to_dict(cfg, sweep), sort_keys=False)
