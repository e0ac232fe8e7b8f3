"""File formats: binary PGM images, CSV tables, manifests, text reports.

PGM is 8-bit binary (P5) with maxval 255.  Values are mapped linearly
from [0, 1] (clamping first) and rounded half away from zero, so 0.5
becomes 128, not the banker's 127/128 coin flip.  Reading maps bytes back
to v / 255.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = [
    "write_pgm",
    "read_pgm",
    "write_csv",
    "read_csv",
    "write_manifest",
    "read_manifest",
]


def write_pgm(path, img: np.ndarray) -> None:
    if img.ndim != 2:
        raise ValueError("need a 2-d image")
    h, w = img.shape
    scaled = np.clip(img, 0.0, 1.0) * 255.0
    # Round half away from zero; values are non-negative here.
    data = np.floor(scaled + 0.5).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed; a single whitespace byte ends the header.
    tokens = []
    i = 0
    while len(tokens) < 4:
        while i < len(raw) and raw[i : i + 1].isspace():
            i += 1
        if i < len(raw) and raw[i : i + 1] == b"#":
            while i < len(raw) and raw[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(raw) and not raw[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ValueError(f"truncated PGM header in {path}")
        tokens.append(raw[i:j])
        i = j
    i += 1  # the single whitespace after maxval
    if tokens[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM (P5) file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}, expected 255")
    data = np.frombuffer(raw[i : i + h * w], dtype=np.uint8)
    if data.size != h * w:
        raise ValueError(f"PGM payload of {path} is truncated")
    return data.reshape(h, w).astype(np.float64) / 255.0


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_manifest(path, entries: list[dict]) -> None:
    """Manifest of degraded images: one line per image with its draw."""
    lines = ["# filename sigma s delta q seed"]
    for e in entries:
        lines.append(
            f"{e['filename']} {float(e['sigma'])!r} {int(e['s'])} "
            f"{float(e['delta'])!r} {int(e['q'])} {int(e['seed'])}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> list[dict]:
    entries = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"malformed manifest line: {line!r}")
        entries.append(
            {
                "filename": parts[0],
                "sigma": float(parts[1]),
                "s": int(parts[2]),
                "delta": float(parts[3]),
                "q": int(parts[4]),
                "seed": int(parts[5]),
            }
        )
    return entries
