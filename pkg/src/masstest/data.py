"""Dataset containers, validation, and the on-disk dataset format.

Two kinds of datasets are supported: raw multichannel time series
(:class:`TrialSet`) and time-frequency power tensors (:class:`TFRTensor`).
Both are stored on disk as a directory holding ``meta.json`` plus a
``data.bin`` of little-endian float64 values in row-major order, which
round-trips bit-exactly.

All containers are immutable after construction (arrays are marked
read-only), so they can be shared freely across worker threads.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

__all__ = [
    "LabelVector",
    "TrialSet",
    "TFRTensor",
    "SensorLayout",
    "load_dataset",
    "save_dataset",
    "slice_channel",
    "load_csv_dataset",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LabelVector:
    """Per-trial condition labels for a binary design.

    Labels are kept as strings; the two condition codes map to {0, 1} by
    lexicographic order, which fixes the class coding deterministically.
    """

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(v) for v in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != 2:
            raise ValueError(
                f"labels must contain exactly two distinct conditions, "
                f"got {sorted(set(labels))}"
            )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def classes(self) -> tuple[str, str]:
        """The two condition codes in lexicographic order (code 0, code 1)."""
        a, b = sorted(set(self.labels))
        return a, b

    @property
    def codes(self) -> np.ndarray:
        """Integer class codes in trial order (0 for the first class)."""
        second = self.classes[1]
        return np.fromiter((1 if v == second else 0 for v in self.labels), dtype=np.intp)

    def class_counts(self) -> tuple[int, int]:
        codes = self.codes
        return int(np.sum(codes == 0)), int(np.sum(codes == 1))

    def permuted(self, order: np.ndarray) -> "LabelVector":
        """Labels re-ordered by the given trial index array."""
        order = np.asarray(order)
        if sorted(order.tolist()) != list(range(len(self.labels))):
            raise ValueError("order must be a permutation of trial indices")
        return LabelVector(tuple(self.labels[i] for i in order))


@dataclass(frozen=True)
class TrialSet:
    """Raw time series: trials x channels x timepoints plus metadata."""

    samples: np.ndarray
    sample_rate: float
    channel_names: tuple[str, ...]
    labels: LabelVector

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 3:
            raise ValueError(
                f"samples must be 3-D (trials, channels, timepoints), got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != samples.shape[1]:
            raise ValueError(
                f"{len(names)} channel names for {samples.shape[1]} channels"
            )
        if len(self.labels) != samples.shape[0]:
            raise ValueError(
                f"{len(self.labels)} labels for {samples.shape[0]} trials"
            )
        object.__setattr__(self, "samples", _freeze(samples))
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def n_trials(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def n_timepoints(self) -> int:
        return self.samples.shape[2]


@dataclass(frozen=True)
class TFRTensor:
    """Time-frequency power: trials x channels x freqs x times plus axes."""

    power: np.ndarray
    freq_axis: np.ndarray
    time_axis: np.ndarray
    channel_names: tuple[str, ...]
    labels: LabelVector

    def __post_init__(self):
        power = np.asarray(self.power, dtype=np.float64)
        freqs = np.asarray(self.freq_axis, dtype=np.float64)
        times = np.asarray(self.time_axis, dtype=np.float64)
        if power.ndim != 4:
            raise ValueError(
                f"power must be 4-D (trials, channels, freqs, times), got shape {power.shape}"
            )
        if not np.all(np.isfinite(power)):
            raise ValueError("power contains NaN or Inf")
        if np.any(power < 0):
            raise ValueError("power values must be non-negative")
        if freqs.ndim != 1 or times.ndim != 1:
            raise ValueError("freq_axis and time_axis must be 1-D")
        if not np.all(np.isfinite(freqs)) or not np.all(np.isfinite(times)):
            raise ValueError("axes contain NaN or Inf")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("freq_axis must be strictly increasing")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("time_axis must be strictly increasing")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != power.shape[1]:
            raise ValueError(f"{len(names)} channel names for {power.shape[1]} channels")
        if freqs.size != power.shape[2]:
            raise ValueError(f"freq_axis length {freqs.size} != {power.shape[2]} freq bins")
        if times.size != power.shape[3]:
            raise ValueError(f"time_axis length {times.size} != {power.shape[3]} time bins")
        if len(self.labels) != power.shape[0]:
            raise ValueError(f"{len(self.labels)} labels for {power.shape[0]} trials")
        object.__setattr__(self, "power", _freeze(power))
        object.__setattr__(self, "freq_axis", _freeze(freqs))
        object.__setattr__(self, "time_axis", _freeze(times))
        object.__setattr__(self, "channel_names", names)

    @property
    def n_trials(self) -> int:
        return self.power.shape[0]

    @property
    def n_channels(self) -> int:
        return self.power.shape[1]

    @property
    def n_freqs(self) -> int:
        return self.power.shape[2]

    @property
    def n_times(self) -> int:
        return self.power.shape[3]

    def with_labels(self, labels: LabelVector) -> "TFRTensor":
        """Same tensor with a replacement label vector (e.g. a permutation)."""
        return TFRTensor(self.power, self.freq_axis, self.time_axis, self.channel_names, labels)


@dataclass(frozen=True)
class SensorLayout:
    """2-D layout-plane positions for the channels (used for adjacency and maps)."""

    channel_names: tuple[str, ...]
    positions: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.channel_names)
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError(f"positions must be (n, 2), got shape {pos.shape}")
        if len(names) != pos.shape[0]:
            raise ValueError(f"{len(names)} names for {pos.shape[0]} positions")
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions contain NaN or Inf")
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "positions", _freeze(pos))

    def __len__(self) -> int:
        return len(self.channel_names)


def save_dataset(obj: TrialSet | TFRTensor, path: str | Path, layout: SensorLayout | None = None) -> None:
    """Write a dataset directory (``meta.json`` + ``data.bin``).

    The binary payload is float64 little-endian in row-major order
    (trial, channel, freq, time) so a later :func:`load_dataset`
    reproduces the object bit-exactly.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, TFRTensor):
        meta = {
            "format_version": FORMAT_VERSION,
            "kind": "tfr",
            "dims": list(obj.power.shape),
            "channel_names": list(obj.channel_names),
            "labels": list(obj.labels.labels),
            "freq_axis_hz": obj.freq_axis.tolist(),
            "time_axis_s": obj.time_axis.tolist(),
        }
        payload = obj.power
    elif isinstance(obj, TrialSet):
        meta = {
            "format_version": FORMAT_VERSION,
            "kind": "raw",
            "dims": list(obj.samples.shape),
            "channel_names": list(obj.channel_names),
            "labels": list(obj.labels.labels),
            "sample_rate_hz": obj.sample_rate,
        }
        payload = obj.samples
    else:
        raise TypeError(f"cannot save object of type {type(obj).__name__}")
    if layout is not None:
        if layout.channel_names != obj.channel_names:
            raise ValueError("layout channel names do not match dataset channels")
        meta["layout"] = layout.positions.tolist()
    with open(path / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(path / "data.bin", "wb") as fh:
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def load_dataset(path: str | Path) -> TrialSet | TFRTensor:
    """Read a dataset directory written by :func:`save_dataset`."""
    path = Path(path)
    meta_path = path / "meta.json"
    bin_path = path / "data.bin"
    if not meta_path.is_file():
        raise FileNotFoundError(f"missing {meta_path}")
    if not bin_path.is_file():
        raise FileNotFoundError(f"missing {bin_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unknown format_version {version!r} (expected {FORMAT_VERSION})")
    dims = tuple(int(d) for d in meta["dims"])
    raw = np.frombuffer(bin_path.read_bytes(), dtype="<f8")
    expected = int(np.prod(dims))
    if raw.size != expected:
        raise ValueError(
            f"data.bin holds {raw.size} values but dims {dims} require {expected}"
        )
    data = raw.reshape(dims)
    labels = LabelVector(tuple(meta["labels"]))
    kind = meta.get("kind")
    if kind == "tfr":
        return TFRTensor(
            power=data,
            freq_axis=np.asarray(meta["freq_axis_hz"], dtype=np.float64),
            time_axis=np.asarray(meta["time_axis_s"], dtype=np.float64),
            channel_names=tuple(meta["channel_names"]),
            labels=labels,
        )
    if kind == "raw":
        return TrialSet(
            samples=data,
            sample_rate=float(meta["sample_rate_hz"]),
            channel_names=tuple(meta["channel_names"]),
            labels=labels,
        )
    raise ValueError(f"unknown dataset kind {kind!r}")


def load_layout(path: str | Path) -> SensorLayout | None:
    """Read the optional sensor layout stored in a dataset's metadata."""
    with open(Path(path) / "meta.json") as fh:
        meta = json.load(fh)
    if "layout" not in meta:
        return None
    return SensorLayout(tuple(meta["channel_names"]), np.asarray(meta["layout"], dtype=np.float64))


def slice_channel(t: TFRTensor, l: int) -> np.ndarray:
    """Per-trial stack of the freq x time slab for channel ``l`` (1-based).

    Channel numbering follows the 1..nc convention of the analysis notation;
    trial order is preserved.
    """
    if not 1 <= l <= t.n_channels:
        raise IndexError(f"channel index {l} out of range 1..{t.n_channels}")
    return t.power[:, l - 1]


def load_csv_dataset(path: str | Path) -> TFRTensor:
    """Import a 2-D toy dataset from CSV.

    Expected layout: a header row ``label,v1,v2,...`` then one row per
    trial. The variables become time bins of a single synthetic channel
    and frequency, so every test in the package can run on plain tabular
    data.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    if not header or header[0].strip().lower() != "label":
        raise ValueError("first CSV column must be 'label'")
    body = [r for r in rows[1:] if r]
    labels = LabelVector(tuple(r[0].strip() for r in body))
    try:
        values = np.asarray([[float(v) for v in r[1:]] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"non-numeric value in {path}: {exc}") from exc
    if values.ndim != 2 or values.shape[1] == 0:
        raise ValueError("CSV must contain at least one value column")
    n_vars = values.shape[1]
    return TFRTensor(
        power=values.reshape(len(body), 1, 1, n_vars),
        freq_axis=np.asarray([1.0]),
        time_axis=np.arange(n_vars, dtype=np.float64),
        channel_names=("ch0",),
        labels=labels,
    )
