"""JSON experiment configuration: strict parsing into ExperimentConfig.

Schema (all unknown keys are rejected):

    {
      "description": "free text, ignored",
      "instance": {
        "arm_means": [0.5, 0.6],
        "delay": {"kind": "uniform-int", "d": 100}
      },
      "horizon": 50000,
      "replications": 50,
      "seed": 20180111,
      "checkpoint_stride": 100,        // optional, default horizon // 500
      "workers": 1,                    // optional
      "policies": [
        {"name": "odaaf", "variant": "known-expectation", "label": "odaaf"},
        {"name": "qpmd"}
      ],
      "ratio_pairs": [["odaaf", "qpmd"]],   // optional
      "sweep_means": [0, 25, 50, 100]       // optional, sweep subcommand only
    }

Delay kinds and their parameter keys:
    constant: c | uniform-int: d | geometric: p |
    discretized-exponential: rate | discretized-truncated-normal: mu, sigma

Policy entries: name in {odaaf, ucb1, qpmd}; odaaf additionally takes
variant (known-expectation | bounded | variance | naive-bounded) and the
optional overrides mean_delay, delay_bound, delay_variance,
use_variance_over_mean, bridge_enabled, bridge_arm_rule.  Delay parameters
not overridden are filled from the instance's exact delay moments.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Tuple

from .delays import DelayModel
from .env import BanditInstance
from .errors import ConfigurationError
from .harness import ExperimentConfig, PolicySpec

_TOP_KEYS = {
    "description",
    "instance",
    "horizon",
    "replications",
    "seed",
    "checkpoint_stride",
    "workers",
    "policies",
    "ratio_pairs",
    "sweep_means",
}
_INSTANCE_KEYS = {"arm_means", "delay"}
_DELAY_KEYS = {
    "constant": {"c"},
    "uniform-int": {"d"},
    "geometric": {"p"},
    "discretized-exponential": {"rate"},
    "discretized-truncated-normal": {"mu", "sigma"},
}
_POLICY_KEYS = {
    "name",
    "label",
    "variant",
    "mean_delay",
    "delay_bound",
    "delay_variance",
    "use_variance_over_mean",
    "bridge_enabled",
    "bridge_arm_rule",
}


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown {where} keys: {sorted(unknown)}")


def parse_delay(data: dict) -> DelayModel:
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigurationError("delay must be an object with a 'kind'")
    kind = data["kind"]
    if kind not in _DELAY_KEYS:
        raise ConfigurationError(f"unknown delay kind {kind!r}")
    _reject_unknown({k: v for k, v in data.items() if k != "kind"}, _DELAY_KEYS[kind], f"delay[{kind}]")
    try:
        if kind == "constant":
            return DelayModel.constant(data["c"])
        if kind == "uniform-int":
            return DelayModel.uniform_int(data["d"])
        if kind == "geometric":
            return DelayModel.geometric(data["p"])
        if kind == "discretized-exponential":
            return DelayModel.discretized_exponential(data["rate"])
        return DelayModel.discretized_truncated_normal(data["mu"], data["sigma"])
    except KeyError as exc:
        raise ConfigurationError(f"delay kind {kind!r} missing parameter {exc}") from exc


def parse_config(data: dict) -> Tuple[ExperimentConfig, Optional[list]]:
    """Validate a config document; returns (config, sweep_means or None)."""
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    _reject_unknown(data, _TOP_KEYS, "config")
    for key in ("instance", "horizon", "replications", "seed", "policies"):
        if key not in data:
            raise ConfigurationError(f"config is missing required key {key!r}")

    instance_data = data["instance"]
    if not isinstance(instance_data, dict):
        raise ConfigurationError("instance must be an object")
    _reject_unknown(instance_data, _INSTANCE_KEYS, "instance")
    if "arm_means" not in instance_data or "delay" not in instance_data:
        raise ConfigurationError("instance needs arm_means and delay")
    horizon = data["horizon"]
    if not isinstance(horizon, int):
        raise ConfigurationError("horizon must be an integer")
    instance = BanditInstance(
        tuple(instance_data["arm_means"]), parse_delay(instance_data["delay"]), horizon
    )

    policies = []
    if not isinstance(data["policies"], list) or not data["policies"]:
        raise ConfigurationError("policies must be a nonempty list")
    for entry in data["policies"]:
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigurationError("each policy entry needs a 'name'")
        _reject_unknown(entry, _POLICY_KEYS, f"policy[{entry.get('name')}]")
        name = entry["name"]
        label = entry.get("label") or (
            f"odaaf-{entry['variant']}" if name == "odaaf" and "variant" in entry else name
        )
        kwargs = {k: v for k, v in entry.items() if k not in ("name", "label")}
        if "delay_bound" in kwargs and kwargs["delay_bound"] is not None:
            kwargs["delay_bound"] = int(kwargs["delay_bound"])
        policies.append(PolicySpec(kind=name, label=label, **kwargs))

    ratio_pairs = tuple((a, b) for a, b in data.get("ratio_pairs", []))
    sweep_means = data.get("sweep_means")
    if sweep_means is not None:
        if not isinstance(sweep_means, list) or not all(isinstance(x, (int, float)) for x in sweep_means):
            raise ConfigurationError("sweep_means must be a list of numbers")

    seed = data["seed"]
    if not isinstance(seed, int):
        raise ConfigurationError("seed must be an integer")
    stride = data.get("checkpoint_stride")
    if stride is not None and (not isinstance(stride, int) or stride < 1):
        raise ConfigurationError("checkpoint_stride must be a positive integer")
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigurationError("workers must be a positive integer")

    cfg = ExperimentConfig(
        instance=instance,
        policies=tuple(policies),
        replications=int(data["replications"]),
        master_seed=seed,
        checkpoint_stride=stride,
        workers=workers,
        ratio_pairs=ratio_pairs,
    )
    return cfg, sweep_means


def load_config_file(path) -> Tuple[ExperimentConfig, Optional[list]]:
    p = Path(path)
    if not p.is_file():
        preset = preset_path(str(path))
        if preset is None:
            raise ConfigurationError(f"config file not found: {path}")
        p = preset
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {p} is not valid JSON: {exc}") from exc
    return parse_config(data)


def preset_path(name: str) -> Optional[Path]:
    """Resolve a bundled preset name like 'fig3a' or 'fig3a.json'."""
    stem = name[:-5] if name.endswith(".json") else name
    if not stem.isidentifier() and not stem.replace("-", "").isalnum():
        return None
    candidate = Path(__file__).parent / "presets" / f"{stem}.json"
    return candidate if candidate.is_file() else None
