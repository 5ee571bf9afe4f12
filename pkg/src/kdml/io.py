"""File formats: binary dataset container, model checkpoints, CSV results.

All binary payloads are little-endian float64 (int64 for index arrays).
Every write goes to a temporary file in the target directory and is renamed
into place, so readers never observe a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kdml.config import RunConfig
from kdml.errors import InputError, KdmlError
from kdml.learn import LstmParams, MlpParams, WindowedDataset
from kdml.learn.lstm import GATE_NAMES
from kdml.pipeline import CellData, ExperimentResult, Normalizer

DATASET_MAGIC = b"KDMLDSET"
DATASET_VERSION = 1
CHECKPOINT_MAGIC = b"KDMLCKPT"
CHECKPOINT_VERSION = 1
RESULT_FIELDS = ("estimator", "snr_db", "nps", "mse", "seed", "wall_ms")

_CKPT_HEADER = struct.Struct("<8sIIIIIIIIddd16sQ")
_KIND_LSTM, _KIND_MLP = 0, 1


class FormatError(KdmlError, OSError):
    """Unreadable or inconsistent file."""


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _le(arr: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(arr):
        arr = np.stack((arr.real, arr.imag), axis=-1)
    if np.issubdtype(arr.dtype, np.integer):
        return np.ascontiguousarray(arr, dtype="<i8")
    return np.ascontiguousarray(arr, dtype="<f8")


# -- dataset container --------------------------------------------------------


def cell_name(snr_db: float, nps: int, seed: int) -> str:
    return f"snr{float(snr_db):g}_nps{int(nps)}_seed{int(seed)}"


def _dataset_arrays(cell: CellData) -> dict[str, np.ndarray]:
    arrays = {}
    for split, sets in (("train", cell.train), ("test", cell.test)):
        for key in sorted(sets):
            arrays[f"{split}/{key}/inputs"] = sets[key].inputs
            arrays[f"{split}/{key}/targets"] = sets[key].targets
        arrays[f"{split}/positions"] = next(iter(sets.values())).positions
    arrays["test/truth"] = cell.truth
    arrays["channel/path_gains"] = cell.path_gains
    arrays["channel/taps"] = cell.taps
    return arrays


def write_dataset(path, cell: CellData, config: RunConfig) -> None:
    """Binary container plus a ``<path>.cfg`` key=value config dump."""
    arrays = {k: _le(v) for k, v in _dataset_arrays(cell).items()}
    header = {
        "config_hash": config.config_hash(),
        "seed": cell.seed,
        "snr_db": cell.snr_db,
        "nps": cell.nps,
        "n_steps": config.n_steps,
        "horizon": config.horizon,
        "fft_size": config.fft_size,
        "counts": {"train": len(cell.train["ls"]), "test": len(cell.test["ls"])},
        "complex_arrays": ["channel/path_gains"],
        "arrays": [{"name": k, "dtype": v.dtype.str, "shape": list(v.shape)} for k, v in arrays.items()],
    }
    head = json.dumps(header, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(DATASET_MAGIC)
    buf.write(struct.pack("<II", DATASET_VERSION, len(head)))
    buf.write(head)
    for arr in arrays.values():
        buf.write(arr.tobytes())
    atomic_write(path, buf.getvalue())
    sidecar = f"# seed={cell.seed} config_hash={config.config_hash()}\n" + config.to_text()
    atomic_write(str(path) + ".cfg", sidecar.encode())


def read_dataset_header(path) -> dict:
    with open(path, "rb") as fh:
        return _read_header(fh, path)


def _read_header(fh, path) -> dict:
    magic = fh.read(8)
    if magic != DATASET_MAGIC:
        raise FormatError(f"{path}: not a dataset file")
    version, length = struct.unpack("<II", fh.read(8))
    if version != DATASET_VERSION:
        raise FormatError(f"{path}: unsupported dataset version {version}")
    return json.loads(fh.read(length).decode())


def read_dataset(path) -> tuple[CellData, dict]:
    try:
        with open(path, "rb") as fh:
            header = _read_header(fh, path)
            arrays = {}
            for spec in header["arrays"]:
                dtype = np.dtype(spec["dtype"])
                count = int(np.prod(spec["shape"], dtype=np.int64))
                raw = fh.read(count * dtype.itemsize)
                if len(raw) != count * dtype.itemsize:
                    raise FormatError(f"{path}: truncated array {spec['name']}")
                arrays[spec["name"]] = np.frombuffer(raw, dtype=dtype).reshape(spec["shape"]).copy()
    except OSError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"cannot read dataset {path}: {exc}") from exc
    for name in header.get("complex_arrays", []):
        a = arrays[name]
        arrays[name] = a[..., 0] + 1j * a[..., 1]

    def sets(split):
        keys = sorted({n.split("/")[1] for n in arrays if n.startswith(split + "/") and n.count("/") == 2})
        pos = arrays[f"{split}/positions"]
        return {
            k: WindowedDataset(arrays[f"{split}/{k}/inputs"], arrays[f"{split}/{k}/targets"], pos)
            for k in keys
        }

    cell = CellData(
        snr_db=float(header["snr_db"]),
        nps=int(header["nps"]),
        seed=int(header["seed"]),
        train=sets("train"),
        test=sets("test"),
        truth=arrays["test/truth"],
        path_gains=arrays["channel/path_gains"],
        taps=arrays["channel/taps"],
    )
    return cell, header


# -- checkpoints --------------------------------------------------------------


@dataclass
class Checkpoint:
    params: LstmParams | MlpParams
    n_steps: int
    horizon: int
    normalizer: Normalizer
    seed: int = 0
    config_hash: str = ""


def write_checkpoint(path, ckpt: Checkpoint) -> None:
    """Fixed binary header followed by the parameter arrays in declaration order.

    LSTM order is W_f, b_f, W_i, b_i, W_c, b_c, W_o, b_o, W_g, b_g.
    """
    p = ckpt.params
    if isinstance(p, LstmParams):
        kind, i, m, l, layers = _KIND_LSTM, p.input_dim, p.hidden_dim, p.output_dim, 1
        ordered = [getattr(p, name) for name in GATE_NAMES]
    elif isinstance(p, MlpParams):
        kind, i, m, l, layers = _KIND_MLP, p.input_dim, p.width, p.output_dim, p.n_layers
        ordered = list(p.arrays().values())
    else:
        raise InputError(f"cannot checkpoint {type(p).__name__}")
    n = ckpt.normalizer
    header = _CKPT_HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, kind, i, m, l, ckpt.n_steps, ckpt.horizon, layers,
        n.offset_re, n.offset_im, n.scale, ckpt.config_hash.encode().ljust(16, b"\0")[:16], ckpt.seed,
    )
    body = b"".join(_le(a).tobytes() for a in ordered)
    atomic_write(path, header + body)


def read_checkpoint(path) -> Checkpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(data) < _CKPT_HEADER.size:
        raise FormatError(f"{path}: truncated checkpoint")
    (magic, version, kind, i, m, l, n_steps, horizon, layers,
     off_re, off_im, scale, chash, seed) = _CKPT_HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    if kind == _KIND_LSTM:
        rows = i + m
        shapes = [(rows, m), (m,)] * 4 + [(m, l), (l,)]
        names = GATE_NAMES
    elif kind == _KIND_MLP:
        dims = [i] + [m] * (layers - 1) + [l]
        shapes, names = [], []
        for k in range(layers):
            shapes += [(dims[k], dims[k + 1]), (dims[k + 1],)]
            names += [f"w{k}", f"b{k}"]
    else:
        raise FormatError(f"{path}: unknown model kind {kind}")
    total = sum(int(np.prod(s)) for s in shapes)
    flat = np.frombuffer(data, dtype="<f8", offset=_CKPT_HEADER.size)
    if flat.size != total:
        raise FormatError(f"{path}: expected {total} parameters, found {flat.size}")
    arrays, pos = {}, 0
    for name, shape in zip(names, shapes):
        size = int(np.prod(shape))
        arrays[name] = flat[pos : pos + size].reshape(shape).astype(np.float64)
        pos += size
    if kind == _KIND_LSTM:
        params = LstmParams(**arrays)
    else:
        params = MlpParams(
            [arrays[f"w{k}"] for k in range(layers)], [arrays[f"b{k}"] for k in range(layers)]
        )
    return Checkpoint(
        params=params,
        n_steps=n_steps,
        horizon=horizon,
        normalizer=Normalizer(off_re, off_im, scale),
        seed=seed,
        config_hash=chash.rstrip(b"\0").decode(),
    )


# -- CSV ----------------------------------------------------------------------


def _comment_block(meta: dict) -> str:
    return "".join(f"# {k}={v}\n" for k, v in meta.items())


def write_results(path, rows: list[ExperimentResult], meta: dict) -> None:
    """Results CSV; ``mse`` is written with 17 significant digits so it round-trips."""
    out = io.StringIO()
    out.write(_comment_block(meta))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RESULT_FIELDS)
    for r in rows:
        writer.writerow(
            [r.estimator, f"{r.snr_db:g}", r.nps, format(r.mse, ".17g"), r.seed, f"{r.wall_ms:.3f}"]
        )
    atomic_write(path, out.getvalue().encode())


def read_results(path) -> tuple[list[ExperimentResult], dict]:
    meta, lines = {}, []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read results {path}: {exc}") from exc
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif line:
            lines.append(line)
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != RESULT_FIELDS:
        raise FormatError(f"{path}: unexpected header {reader.fieldnames}")
    rows = [
        ExperimentResult(
            snr_db=float(r["snr_db"]),
            nps=int(r["nps"]),
            estimator=r["estimator"],
            mse=float(r["mse"]),
            seed=int(r["seed"]),
            wall_ms=float(r["wall_ms"]),
        )
        for r in reader
    ]
    return rows, meta


def write_loss_curve(path, losses: list[float], meta: dict) -> None:
    out = io.StringIO()
    out.write(_comment_block(meta))
    out.write("epoch,loss\n")
    for k, v in enumerate(losses, 1):
        out.write(f"{k},{format(v, '.17g')}\n")
    atomic_write(path, out.getvalue().encode())
