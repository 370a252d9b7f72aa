"""Model checkpoints as uncompressed ``.npz`` archives.

Archive members:

``__format__``   the string ``gcngan-checkpoint``
``__version__``  integer format version (currently 1)
``__kind__``     ``gcn-gan`` or ``lstm-baseline``
``__config__``   JSON echo of the configuration used for training
``<group>/<dotted.name>``  one float64 array per parameter matrix, e.g.
                 ``generator/lstm.wx_i`` or ``discriminator/output.bias``

Groups are ``generator`` and ``discriminator`` for ``gcn-gan`` and ``params``
for ``lstm-baseline``. Arrays keep their shapes, so loading is bit-exact.
"""
from __future__ import annotations

import dataclasses
import json
import typing
from pathlib import Path

import numpy as np

from .baseline import LstmBaselineParams
from .model import DiscriminatorParams, GeneratorParams
from .nn import named_arrays

MAGIC = "gcngan-checkpoint"
VERSION = 1
GROUPS = {
    "gcn-gan": {"generator": GeneratorParams, "discriminator": DiscriminatorParams},
    "lstm-baseline": {"params": LstmBaselineParams},
}


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, kind: str, params: dict, config: dict | None = None) -> None:
    if kind not in GROUPS or set(params) != set(GROUPS[kind]):
        raise CheckpointError(f"kind {kind!r} needs groups {sorted(GROUPS.get(kind, {}))}")
    members = {
        "__format__": np.array(MAGIC),
        "__version__": np.array(VERSION),
        "__kind__": np.array(kind),
        "__config__": np.array(json.dumps(config or {}, sort_keys=True)),
    }
    for group, tree in params.items():
        for name, arr in named_arrays(tree):
            members[f"{group}/{name}"] = arr
    with Path(path).open("wb") as fh:
        np.savez(fh, **members)


def _build(cls, arrays: dict, prefix: str):
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for f in dataclasses.fields(cls):
        key = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(hints[f.name]):
            kwargs[f.name] = _build(hints[f.name], arrays, key + ".")
        else:
            if key not in arrays:
                raise CheckpointError(f"missing parameter {key}")
            kwargs[f.name] = arrays[key]
    return cls(**kwargs)


def load_checkpoint(path) -> tuple[str, dict, dict]:
    """Return ``(kind, params_by_group, config)``."""
    with np.load(path, allow_pickle=False) as z:
        if "__format__" not in z.files or str(z["__format__"]) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint")
        if int(z["__version__"]) != VERSION:
            raise CheckpointError(f"{path}: unsupported version {int(z['__version__'])}")
        kind = str(z["__kind__"])
        if kind not in GROUPS:
            raise CheckpointError(f"{path}: unknown kind {kind!r}")
        config = json.loads(str(z["__config__"]))
        params = {}
        for group, cls in GROUPS[kind].items():
            arrays = {k[len(group) + 1:]: z[k] for k in z.files if k.startswith(group + "/")}
            params[group] = _build(cls, arrays, "")
    return kind, params, config
