"""JSON encodings for instances, mechanisms and solver reports.

Instance files look like::

    {"states": 2, "actions": 2, "kernel": [[[...]]],
     "receiver_utility": [[...]], "sender_reward": [[...]], "name": "..."}

Mechanisms serialise as ``{"memory": k, "table": {key: [[...]]}}`` where each
key lists the slice's ``(state, action)`` pairs oldest first as
comma-separated integers (the empty string for memory 0) and each value is a
``states x actions`` table of recommendation probabilities.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from mpp.core import MppInstance, SignalingMechanism, validate_instance
from mpp.errors import InvalidInstance, InvalidMechanism

BUNDLED_INSTANCES = ("example1",)


def bundled_instance_path(name: str) -> Path:
    """Filesystem path of a bundled instance such as ``"example1"``."""
    if name not in BUNDLED_INSTANCES:
        raise KeyError(name)
    return Path(str(resources.files("mpp").joinpath("data", f"{name}.json")))


def example1() -> MppInstance:
    """The two-state example instance shipped with the package."""
    return load_instance(bundled_instance_path("example1"))


def instance_from_dict(data: dict) -> MppInstance:
    """Build and validate an instance from its JSON dictionary."""
    required = ("states", "actions", "kernel", "receiver_utility", "sender_reward")
    missing = [k for k in required if k not in data]
    if missing:
        raise InvalidInstance(f"missing field(s): {', '.join(missing)}")
    try:
        inst = MppInstance(
            kernel=data["kernel"],
            receiver_utility=data["receiver_utility"],
            sender_reward=data["sender_reward"],
            name=str(data.get("name", "")),
        )
    except (ValueError, TypeError) as exc:
        raise InvalidInstance(str(exc)) from exc
    if inst.n_states != data["states"] or inst.n_actions != data["actions"]:
        raise InvalidInstance(
            f"declared size {data['states']}x{data['actions']} does not match arrays "
            f"{inst.n_states}x{inst.n_actions}"
        )
    problems = validate_instance(inst)
    if problems:
        raise InvalidInstance("; ".join(problems))
    return inst


def instance_to_dict(inst: MppInstance) -> dict:
    return {
        "name": inst.name,
        "states": inst.n_states,
        "actions": inst.n_actions,
        "kernel": inst.kernel.tolist(),
        "receiver_utility": inst.receiver_utility.tolist(),
        "sender_reward": inst.sender_reward.tolist(),
    }


def load_instance(path) -> MppInstance:
    """Read an instance file.

    Raises
    ------
    InvalidInstance
        On unreadable files, malformed JSON (with line and column) or schema
        violations.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInstance(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InvalidInstance(f"{path}: top-level JSON value must be an object")
    return instance_from_dict(data)


def save_instance(inst: MppInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def _slice_key(h: int, memory: int, n_states: int, n_actions: int) -> str:
    n_pairs = n_states * n_actions
    digits = []
    for _ in range(memory):
        h, x = divmod(h, n_pairs)
        digits.append(divmod(x, n_actions))
    return ",".join(f"{w},{a}" for w, a in reversed(digits))


def _parse_slice_key(key: str, memory: int, n_states: int, n_actions: int) -> int:
    if memory == 0:
        if key.strip():
            raise InvalidMechanism(f"memory-0 mechanism has non-empty slice key {key!r}")
        return 0
    parts = [int(p) for p in key.split(",")]
    if len(parts) != 2 * memory:
        raise InvalidMechanism(f"slice key {key!r} should list {memory} pairs")
    h = 0
    for w, a in zip(parts[::2], parts[1::2]):
        if not (0 <= w < n_states and 0 <= a < n_actions):
            raise InvalidMechanism(f"slice key {key!r} out of range")
        h = h * n_states * n_actions + w * n_actions + a
    return h


def mechanism_to_dict(sigma: SignalingMechanism) -> dict:
    table = {
        _slice_key(h, sigma.memory, sigma.n_states, sigma.n_actions): sigma.table[h].tolist()
        for h in range(sigma.n_windows)
    }
    return {"memory": sigma.memory, "states": sigma.n_states, "actions": sigma.n_actions, "table": table}


def mechanism_from_dict(data: dict) -> SignalingMechanism:
    try:
        memory = int(data["memory"])
        entries = data["table"]
        first = np.asarray(next(iter(entries.values())), dtype=float)
    except (KeyError, TypeError, StopIteration, ValueError) as exc:
        raise InvalidMechanism(f"malformed mechanism: {exc}") from exc
    n_states, n_actions = first.shape
    n_windows = (n_states * n_actions) ** memory
    table = np.full((n_windows, n_states, n_actions), np.nan)
    for key, rows in entries.items():
        table[_parse_slice_key(key, memory, n_states, n_actions)] = rows
    if np.isnan(table).any():
        raise InvalidMechanism("mechanism table does not cover every slice")
    return SignalingMechanism(memory, table)


def load_mechanism(path) -> SignalingMechanism:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidMechanism(f"cannot read mechanism {path}: {exc}") from exc
    if "mechanism" in data and "table" not in data:
        data = data["mechanism"]
    return mechanism_from_dict(data)


def to_jsonable(obj):
    """Recursively convert numpy containers and scalars to JSON-compatible values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, SignalingMechanism):
        return mechanism_to_dict(obj)
    return obj


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(to_jsonable(payload), indent=2) + "\n")
