"""Zeta-zero table ingestion, validation, and explicit-formula coefficients.

Tables hold ascending ordinates gamma of zeros rho = beta + i gamma with a
stated absolute accuracy and a completeness height t_max.  Counts are
validated against the Riemann-von Mangoldt estimate at every prefix.
Zero-finding itself is out of scope; tables are input data.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import MollifierParams, logan_ell

ZTAB_MAGIC = b"ZTAB"
_FRAC_SCALE = 2.0 ** 64

__all__ = [
    "ZeroTable",
    "OffLineZero",
    "CoefficientSet",
    "ZeroTableError",
    "rvm_estimate",
    "rvm_band",
    "load_zeros",
    "write_zeros",
    "validate_completeness",
    "make_coefficients",
]


class ZeroTableError(ValueError):
    pass


def rvm_estimate(T: float) -> float:
    """Riemann-von Mangoldt zero-count estimate (T/2pi) log(T/(2 pi e)) + 7/8."""
    if T <= 0:
        return 0.0
    return T / (2 * math.pi) * math.log(T / (2 * math.pi * math.e)) + 7.0 / 8.0


def rvm_band(T: float) -> float:
    """Validation tolerance band around the count estimate."""
    return 2.0 + 0.5 * math.log(max(T, math.e))


@dataclass(frozen=True)
class OffLineZero:
    """Annotation for a table entry flagged as possibly off the critical
    line.  beta is None when the file gives only the index."""

    index: int  # 1-based position in the gamma list
    beta: float | None = None


@dataclass(frozen=True)
class ZeroTable:
    gammas: np.ndarray
    accuracy: float
    t_max: float
    off_line: tuple[OffLineZero, ...] = ()

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        object.__setattr__(self, "gammas", g)
        if self.accuracy <= 0:
            raise ZeroTableError(f"accuracy must be > 0, got {self.accuracy}")
        if g.size:
            if np.any(g[:-1] >= g[1:]):
                i = int(np.argmax(g[:-1] >= g[1:]))
                raise ZeroTableError(
                    f"ordinates not strictly ascending at entry {i + 2} "
                    f"({g[i + 1]} after {g[i]})")
            if g[0] <= 14.0:
                raise ZeroTableError(f"first ordinate {g[0]} <= 14 (gamma_1 = 14.13...)")
            self._check_counts(g)
        for oz in self.off_line:
            if not (1 <= oz.index <= g.size):
                raise ZeroTableError(f"off-line index {oz.index} out of range")
            if oz.beta is not None and not (0.0 < oz.beta < 1.0):
                raise ZeroTableError(f"off-line beta {oz.beta} outside (0, 1)")

    @staticmethod
    def _check_counts(g: np.ndarray):
        counts = np.arange(1, g.size + 1, dtype=float)
        est = g / (2 * np.pi) * np.log(g / (2 * np.pi * np.e)) + 7.0 / 8.0
        band = 2.0 + 0.5 * np.log(np.maximum(g, np.e))
        bad = np.abs(counts - est) > band
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ZeroTableError(
                f"count {int(counts[i])} at T={g[i]:.6f} deviates from the "
                f"Riemann-von Mangoldt estimate {est[i]:.3f} by more than {band[i]:.3f}; "
                f"table looks corrupt or incomplete near entry {i + 1}")

    @property
    def count(self) -> int:
        return int(self.gammas.size)

    def on_line_mask(self) -> np.ndarray:
        mask = np.ones(self.gammas.size, dtype=bool)
        for oz in self.off_line:
            mask[oz.index - 1] = False
        return mask


@dataclass(frozen=True)
class CoefficientSet:
    """Explicit-formula coefficients a_rho = ell(gamma)/rho for the on-line
    zeros below the truncation height T."""

    a: np.ndarray
    gammas: np.ndarray
    params: MollifierParams
    T: float

    @property
    def n(self) -> int:
        return int(self.a.size)

    def coeff_l1(self) -> float:
        return float(np.sum(np.abs(self.a)))


def _parse_off_line(text: str) -> tuple[OffLineZero, ...]:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if ":" in piece:
            idx, beta = piece.split(":", 1)
            out.append(OffLineZero(int(idx), float(beta)))
        else:
            out.append(OffLineZero(int(piece)))
    return tuple(out)


def load_zeros(path, fmt: str = "auto") -> ZeroTable:
    """Read a zero table.  Formats: text (header lines '# key=value', one
    ordinate per line) or binary ZTAB; 'auto' sniffs the magic."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "auto":
        with open(path, "rb") as fh:
            fmt = "binary" if fh.read(4) == ZTAB_MAGIC else "text"
    if fmt == "binary":
        return _load_binary(path)
    if fmt == "text":
        return _load_text(path)
    raise ZeroTableError(f"unknown format {fmt!r}")


def _load_text(path: Path) -> ZeroTable:
    accuracy = None
    t_max = None
    off_line = ()
    gammas = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    raise ZeroTableError(f"{path}:{lineno}: malformed header {line!r}")
                key, val = (s.strip() for s in body.split("=", 1))
                try:
                    if key == "accuracy":
                        accuracy = float(val)
                    elif key == "t_max":
                        t_max = float(val)
                    elif key == "off_line":
                        off_line = _parse_off_line(val)
                    else:
                        raise ZeroTableError(f"{path}:{lineno}: unknown header key {key!r}")
                except ValueError as exc:
                    raise ZeroTableError(f"{path}:{lineno}: {exc}") from exc
                continue
            try:
                gammas.append(float(line))
            except ValueError as exc:
                raise ZeroTableError(f"{path}:{lineno}: bad ordinate {line!r}") from exc
    if accuracy is None or t_max is None:
        raise ZeroTableError(f"{path}: missing required headers accuracy/t_max")
    return ZeroTable(np.array(gammas, dtype=float), accuracy, t_max, off_line)


def _load_binary(path: Path) -> ZeroTable:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != ZTAB_MAGIC:
            raise ZeroTableError(f"{path}: bad magic {magic!r}")
        header = fh.read(8 + 8 + 8)
        if len(header) < 24:
            raise ZeroTableError(f"{path}: truncated header")
        count, = struct.unpack("<Q", header[:8])
        accuracy, t_max = struct.unpack("<dd", header[8:])
        body = np.fromfile(fh, dtype=np.dtype([("ip", "<u8"), ("fr", "<u8")]), count=count)
        if body.size != count:
            raise ZeroTableError(f"{path}: expected {count} records, found {body.size}")
    gammas = body["ip"].astype(float) + body["fr"].astype(float) / _FRAC_SCALE
    return ZeroTable(gammas, accuracy, t_max)


def write_zeros(table: ZeroTable, path, fmt: str = "binary"):
    """Write a table.  Binary round-trips binary64 ordinates bit-exactly
    (integer part + 64-bit fraction, matching the 2^-64 convention); the
    binary layout has no off-line channel, so annotated tables must use text."""
    path = Path(path)
    if fmt == "binary":
        if table.off_line:
            raise ZeroTableError("binary ZTAB cannot carry off-line annotations; use text")
        ip = np.floor(table.gammas)
        fr = (table.gammas - ip) * _FRAC_SCALE  # exact: power-of-two scale
        with open(path, "wb") as fh:
            fh.write(ZTAB_MAGIC)
            fh.write(struct.pack("<Qdd", table.count, table.accuracy, table.t_max))
            rec = np.empty(table.count, dtype=np.dtype([("ip", "<u8"), ("fr", "<u8")]))
            rec["ip"] = ip.astype(np.uint64)
            rec["fr"] = fr.astype(np.uint64)
            rec.tofile(fh)
    elif fmt == "text":
        with open(path, "w") as fh:
            fh.write(f"# accuracy={table.accuracy!r}\n")
            fh.write(f"# t_max={table.t_max!r}\n")
            if table.off_line:
                parts = [f"{z.index}" if z.beta is None else f"{z.index}:{z.beta!r}"
                         for z in table.off_line]
                fh.write("# off_line=" + ",".join(parts) + "\n")
            for g in table.gammas:
                fh.write(f"{g:.15f}\n")
    else:
        raise ZeroTableError(f"unknown format {fmt!r}")


def validate_completeness(table: ZeroTable, T: float) -> int:
    """Count of ordinates <= T, asserting the Riemann-von Mangoldt band."""
    if T > table.t_max:
        raise ZeroTableError(
            f"T={T} exceeds the table's completeness guarantee t_max={table.t_max}")
    count = int(np.searchsorted(table.gammas, T, side="right"))
    est = rvm_estimate(T)
    band = rvm_band(T)
    if abs(count - est) > band:
        raise ZeroTableError(
            f"completeness violation in window T<={T}: count {count} vs "
            f"estimate {est:.3f} (band {band:.3f})")
    return count


def make_coefficients(table: ZeroTable, params: MollifierParams, T: float) -> CoefficientSet:
    """a_rho = ell_{c,eps}(gamma) / rho for on-line zeros with gamma < T
    (for rho = 1/2 + i gamma the Logan argument reduces to gamma).
    Off-line zeros are excluded here and handled individually downstream."""
    if T > table.t_max:
        raise ZeroTableError(
            f"T={T} exceeds the table's completeness guarantee t_max={table.t_max}")
    params.require_zero_sum()
    mask = table.on_line_mask()
    mask &= table.gammas < T
    g = table.gammas[mask]
    ell = np.asarray(logan_ell(params, g), dtype=float)
    rho = 0.5 + 1j * g
    a = ell / rho
    return CoefficientSet(a=a, gammas=g, params=params, T=T)
