"""Matrix files, dataset bundles and run records.

Binary matrix layout (little endian)::

    b"OICA" | version u8 = 1 | reserved u8 = 0 | rows u64 | cols u64 | rows*cols f64

Text layout: a ``rows cols`` header line, then one line per row with
space-separated reals printed to 17 significant digits.

A dataset bundle is a directory holding ``X.mat``, optionally ``A.mat`` and
``S.mat``, and ``meta.txt``. A run record is a directory holding
``meta.txt``, ``W.mat``, ``upsilon.csv`` and ``timing.csv``. Every
``meta.txt`` is UTF-8 ``key=value`` lines with keys sorted. Concurrent
writes to the same path are not supported.
"""

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ChecksumMismatch, FormatError
from .result import ComponentDiagnostics, SeparationResult
from .signal import Dataset
from .sourcegen import SourceSpec, gg_kurtosis

__all__ = [
    "MAGIC",
    "fnv1a64",
    "matrix_to_bytes",
    "matrix_from_bytes",
    "write_matrix",
    "read_matrix",
    "matrix_hash",
    "write_meta",
    "read_meta",
    "write_dataset",
    "read_dataset",
    "RunRecord",
    "write_run_record",
    "read_run_record",
]

MAGIC = b"OICA"
VERSION = 1
_HEADER = struct.Struct("<4sBBQQ")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> str:
    """64-bit FNV-1a digest as 16 hex characters."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return f"{h:016x}"


def matrix_to_bytes(X) -> bytes:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    rows, cols = X.shape
    return _HEADER.pack(MAGIC, VERSION, 0, rows, cols) + X.astype("<f8").tobytes()


def matrix_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise FormatError("truncated header", offset=len(data))
    magic, version, _, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise FormatError(
            f"payload holds {len(data)} bytes, header implies {expected}",
            offset=min(len(data), expected),
        )
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return flat.astype(np.float64).reshape(rows, cols)


def matrix_hash(X) -> str:
    """FNV-1a digest of the binary encoding of ``X`` (header included)."""
    return fnv1a64(matrix_to_bytes(X))


def _format_text(X) -> str:
    rows, cols = X.shape
    lines = [f"{rows} {cols}"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in X]
    return "\n".join(lines) + "\n"


def _parse_text(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty file", line=1)
    head = lines[0].split(" ")
    try:
        rows, cols = (int(t) for t in head)
    except ValueError:
        raise FormatError(f"line 1: bad header {lines[0]!r}", line=1) from None
    if rows < 0 or cols < 0:
        raise FormatError("line 1: negative dimension", line=1)
    body = lines[1:]
    if len(body) != rows:
        raise FormatError(
            f"expected {rows} data lines, found {len(body)}", line=min(len(lines), rows + 1) + 1
        )
    X = np.empty((rows, cols))
    for r, line in enumerate(body):
        fields = line.split(" ")
        if len(fields) != cols:
            raise FormatError(
                f"line {r + 2}: expected {cols} values, found {len(fields)}", line=r + 2
            )
        try:
            X[r] = [float(f) for f in fields]
        except ValueError:
            raise FormatError(f"line {r + 2}: unparsable value", line=r + 2) from None
    return X


def write_matrix(path, X, format: str = "binary") -> None:
    X = np.asarray(X, dtype=np.float64)
    if format == "binary":
        Path(path).write_bytes(matrix_to_bytes(X))
    elif format == "text":
        Path(path).write_text(_format_text(X), encoding="ascii")
    else:
        raise ValueError(f"unknown format {format!r}")


def read_matrix(path, format: Optional[str] = None) -> np.ndarray:
    """Read a matrix file; the format is sniffed from the magic bytes if not given."""
    data = Path(path).read_bytes()
    if format is None:
        format = "binary" if data[:4] == MAGIC else "text"
    if format == "binary":
        return matrix_from_bytes(data)
    if format == "text":
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise FormatError("non-ASCII byte in text matrix", offset=exc.start) from None
        return _parse_text(text)
    raise ValueError(f"unknown format {format!r}")


def write_meta(path, meta: Dict[str, object]) -> None:
    lines = []
    for key in sorted(meta):
        value = str(meta[key])
        if "\n" in value or "=" in key:
            raise ValueError(f"cannot serialize meta entry {key!r}")
        lines.append(f"{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_meta(path) -> Dict[str, str]:
    meta = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}: line {n} is not key=value", line=n)
        meta[key] = value
    return meta


def _floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_floats(text: str):
    return [float(v) for v in text.split(",")] if text else []


def _parse_ints(text: str):
    return [int(v) for v in text.split(",")] if text else []


def write_dataset(directory, dataset: Dataset, spec: Optional[SourceSpec] = None,
                  format: str = "binary") -> Path:
    """Write a dataset bundle; returns the bundle directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(directory / "X.mat", dataset.observed, format)
    if dataset.mixing is not None:
        write_matrix(directory / "A.mat", dataset.mixing, format)
    if dataset.sources is not None:
        write_matrix(directory / "S.mat", dataset.sources, format)
    meta = {
        "N": dataset.n_channels,
        "M": dataset.n_samples,
        "x_hash": matrix_hash(dataset.observed),
    }
    if spec is not None:
        meta.update(
            seed=spec.seed, rho=_floats(spec.rhos), gaussian_count=spec.gaussian_count
        )
    write_meta(directory / "meta.txt", meta)
    return directory


def read_dataset(directory, verify: bool = True) -> Tuple[Dataset, Dict[str, str]]:
    """Load a dataset bundle, checking the stored hash of ``X``."""
    directory = Path(directory)
    meta = read_meta(directory / "meta.txt")
    X = read_matrix(directory / "X.mat")
    if verify and "x_hash" in meta and matrix_hash(X) != meta["x_hash"]:
        raise ChecksumMismatch(f"{directory / 'X.mat'} does not match its recorded hash")
    A = read_matrix(directory / "A.mat") if (directory / "A.mat").exists() else None
    S = read_matrix(directory / "S.mat") if (directory / "S.mat").exists() else None
    kurt = None
    if "rho" in meta and "gaussian_count" in meta:
        rhos = _parse_floats(meta["rho"])
        kurt = np.array([gg_kurtosis(r) for r in rhos] + [0.0] * int(meta["gaussian_count"]))
    return Dataset(observed=X, mixing=A, sources=S, true_kurtoses=kurt), meta


@dataclass
class RunRecord:
    """One algorithm invocation: settings, dataset identity and result."""

    algorithm: str
    L: int
    K: int
    eps: float
    seed: int
    dataset_path: str
    dataset_hash: str
    result: SeparationResult
    options: Dict[str, str] = field(default_factory=dict)


_DIAG_INT = ("iterations", "winner", "winner_iterations", "n_converged",
             "n_unconverged", "n_degenerate")
_DIAG_FLOAT = ("alpha", "upsilon", "threshold", "seconds")


def write_run_record(directory, record: RunRecord, format: str = "binary") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    res = record.result
    meta = {
        "algorithm": record.algorithm,
        "L": record.L,
        "K": record.K,
        "eps": repr(float(record.eps)),
        "seed": record.seed,
        "dataset": record.dataset_path,
        "dataset_hash": record.dataset_hash,
        "n_channels": res.W.shape[1],
        "n_extracted": res.n_extracted,
        "stop_index": "none" if res.stop_index is None else res.stop_index,
        "total_seconds": repr(float(res.total_seconds)),
        "alpha": _floats(res.alpha),
        "diag.accepted": ",".join(str(int(c.accepted)) for c in res.components),
    }
    for name in _DIAG_INT:
        meta[f"diag.{name}"] = ",".join(str(getattr(c, name)) for c in res.components)
    for name in _DIAG_FLOAT:
        meta[f"diag.{name}"] = _floats(getattr(c, name) for c in res.components)
    for key, value in record.options.items():
        meta[f"opt.{key}"] = value
    write_meta(directory / "meta.txt", meta)
    write_matrix(directory / "W.mat", res.W, format)
    (directory / "upsilon.csv").write_text(
        "".join(f"{float(u)!r}\n" for u in res.upsilon), encoding="utf-8"
    )
    timing = ["component_index,seconds"]
    timing += [f"{c.index},{float(c.seconds)!r}" for c in res.components]
    (directory / "timing.csv").write_text("\n".join(timing) + "\n", encoding="utf-8")
    return directory


def read_run_record(directory, verify: bool = True) -> RunRecord:
    """Load a run record; with ``verify`` the referenced dataset's hash is rechecked."""
    directory = Path(directory)
    meta = read_meta(directory / "meta.txt")
    try:
        W = read_matrix(directory / "W.mat")
        upsilon = _parse_floats(
            ",".join(directory.joinpath("upsilon.csv").read_text().split())
        )
        n_comp = len(_parse_ints(meta["diag.iterations"]))
        diag = {name: _parse_ints(meta[f"diag.{name}"]) for name in _DIAG_INT}
        diag.update({name: _parse_floats(meta[f"diag.{name}"]) for name in _DIAG_FLOAT})
        accepted = [bool(int(v)) for v in meta["diag.accepted"].split(",") if v]
        components = [
            ComponentDiagnostics(
                index=k + 1, accepted=accepted[k], **{n: diag[n][k] for n in diag}
            )
            for k in range(n_comp)
        ]
        stop = meta["stop_index"]
        result = SeparationResult(
            algorithm=meta["algorithm"],
            W=W,
            alpha=np.array(_parse_floats(meta["alpha"])),
            upsilon=np.array(upsilon),
            stop_index=None if stop == "none" else int(stop),
            components=components,
            total_seconds=float(meta["total_seconds"]),
        )
        record = RunRecord(
            algorithm=meta["algorithm"],
            L=int(meta["L"]),
            K=int(meta["K"]),
            eps=float(meta["eps"]),
            seed=int(meta["seed"]),
            dataset_path=meta["dataset"],
            dataset_hash=meta["dataset_hash"],
            result=result,
            options={k[4:]: v for k, v in meta.items() if k.startswith("opt.")},
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise FormatError(f"{directory}: malformed run record ({exc})") from exc
    if W.shape[0] != len(upsilon):
        raise FormatError(f"{directory}: W has {W.shape[0]} rows, upsilon.csv {len(upsilon)}")
    if verify:
        x_path = Path(record.dataset_path) / "X.mat"
        if not os.path.exists(x_path):
            raise FileNotFoundError(f"dataset {record.dataset_path} not found")
        if matrix_hash(read_matrix(x_path)) != record.dataset_hash:
            raise ChecksumMismatch(f"dataset {record.dataset_path} changed since the run")
    return record
