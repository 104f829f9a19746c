"""
Binary checkpoint of a fitted variational state.

Layout (little-endian):
    magic       8 bytes  b"SHOPCKPT"
    version     uint32
    header      uint64 length + UTF-8 JSON (model config, item/user ids,
                item groups, catalog hash, seed, extra metadata)
    sections    uint32 count, then per section:
                uint16 name length, name (UTF-8), uint8 ndim,
                ndim x uint64 shape, float64 data in C order
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..exceptions import CatalogMismatchError, DataError
from ..ingestion.catalog import Catalog
from ..model.config import ModelConfig
from .variational import VariationalState

logger = logging.getLogger(__name__)

MAGIC = b"SHOPCKPT"
VERSION = 1


def save_checkpoint(
    path: Path,
    v: VariationalState,
    config: ModelConfig,
    catalog: Catalog,
    seed: int,
    extra: Optional[Dict[str, Any]] = None,
) -> None:
    header = {
        "model_config": config.to_dict(),
        "items": list(catalog.items),
        "users": list(catalog.users),
        "item_group": [int(g) for g in v.item_group],
        "catalog_hash": catalog.fingerprint(),
        "seed": seed,
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        f.write(struct.pack("<I", len(v.params)))
        for name in sorted(v.params):
            array = np.ascontiguousarray(v.params[name], dtype="<f8")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", array.ndim))
            f.write(struct.pack(f"<{array.ndim}Q", *array.shape))
            f.write(array.tobytes())
    logger.info(f"Wrote checkpoint {path} ({len(v.params)} sections)")


def _read(f, fmt: str):
    size = struct.calcsize(fmt)
    data = f.read(size)
    if len(data) != size:
        raise DataError("checkpoint is truncated")
    return struct.unpack(fmt, data)


def load_checkpoint(path: Path) -> Tuple[VariationalState, ModelConfig, Dict[str, Any]]:
    """
    Read a checkpoint.

    Returns:
        (variational state, model config, header dict)
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise DataError(f"{path} is not a checkpoint")
        (version,) = _read(f, "<I")
        if version != VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        (header_length,) = _read(f, "<Q")
        header = json.loads(f.read(header_length).decode("utf-8"))
        (count,) = _read(f, "<I")
        params = {}
        for _ in range(count):
            (name_length,) = _read(f, "<H")
            name = f.read(name_length).decode("utf-8")
            (ndim,) = _read(f, "<B")
            shape = _read(f, f"<{ndim}Q") if ndim else ()
            n_values = int(np.prod(shape)) if shape else 1
            data = f.read(8 * n_values)
            if len(data) != 8 * n_values:
                raise DataError("checkpoint is truncated")
            params[name] = np.frombuffer(data, dtype="<f8").reshape(shape).astype(float)

    config = ModelConfig.from_dict(header["model_config"])
    v = VariationalState(params=params, item_group=np.asarray(header["item_group"], dtype=np.int64))
    v.validate()
    logger.info(f"Loaded checkpoint {path}: {config.label()}, {len(header['items'])} items")
    return v, config, header


def verify_catalog(header: Dict[str, Any], catalog: Catalog) -> None:
    """Raise CatalogMismatchError unless the checkpoint was fitted on this catalog's registries."""
    if header["catalog_hash"] != catalog.fingerprint():
        raise CatalogMismatchError(
            f"checkpoint was fitted on a different catalog "
            f"({len(header['items'])} items / {len(header['users'])} users vs "
            f"{catalog.n_items} / {catalog.n_users})"
        )


def catalog_from_header(header: Dict[str, Any]) -> Catalog:
    """
    Registry-only catalog rebuilt from a checkpoint header.

    Mean prices are 1, so every log normalized price is 0; monthly means are empty.
    """
    items = tuple(header["items"])
    return Catalog(
        items=items,
        users=tuple(header["users"]),
        mean_price=np.ones(len(items)),
        monthly_mean_price=np.empty((len(items), 0)),
    )
