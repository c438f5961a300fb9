"""Bit-exact ROM images, the DOC1 table container and figure-data files.

ROM address of a cell: the per-axis cell coordinates concatenated as bit
fields, first entry of ``axis_order`` in the most significant position.
Each entry holds the control index as an unsigned word; cells without a
control hold the all-ones word.
"""
from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cellspace import AxisSpec, CellSpace
from .doc import NONE, DocTable
from .errors import FormatError, LayoutError
from .models import CostDiscretization, CostKind, CostSpec

__all__ = [
    "RomLayout",
    "PRESETS",
    "rom_addresses",
    "export_rom",
    "import_rom",
    "rom_manifest",
    "write_rom",
    "read_rom",
    "save_doc",
    "load_doc",
    "doc_csv",
    "format_number",
    "write_grid",
    "write_pgm",
    "write_curve",
    "write_trace",
    "write_transition_map",
    "write_gcm_csv",
]

PRESETS = ("sw-x1-high", "hw-x1-low")


def _bits_of(cells: int) -> int:
    b = int(cells).bit_length() - 1
    if 2**b != cells:
        raise LayoutError(f"axis with {cells} cells is not addressable by whole bits")
    return b


@dataclass(frozen=True)
class RomLayout:
    axis_order: tuple[int, ...]
    bits_per_axis: tuple[int, ...]
    data_bits: int = 8

    def __post_init__(self):
        object.__setattr__(self, "axis_order", tuple(int(a) for a in self.axis_order))
        object.__setattr__(self, "bits_per_axis", tuple(int(b) for b in self.bits_per_axis))
        if sorted(self.axis_order) != list(range(len(self.bits_per_axis))):
            raise LayoutError(f"axis_order {self.axis_order} is not a permutation of the axes")
        if self.data_bits < 1:
            raise LayoutError("data_bits must be positive")

    @property
    def address_bits(self) -> int:
        return sum(self.bits_per_axis)

    @property
    def word_bytes(self) -> int:
        return (self.data_bits + 7) // 8

    @property
    def none_word(self) -> int:
        return 2**self.data_bits - 1

    @classmethod
    def for_space(cls, cs: CellSpace, axis_order=None, data_bits: int = 8) -> "RomLayout":
        order = tuple(range(cs.ndim)) if axis_order is None else axis_order
        return cls(order, tuple(_bits_of(a.cells) for a in cs.axes), data_bits)

    @classmethod
    def preset(cls, name: str, cs: CellSpace, data_bits: int = 8) -> "RomLayout":
        """``sw-x1-high``: x1 in the high address bits; ``hw-x1-low``: x1 on the low lines."""
        if name == "sw-x1-high":
            order = tuple(range(cs.ndim))
        elif name == "hw-x1-low":
            order = tuple(reversed(range(cs.ndim)))
        else:
            raise LayoutError(f"unknown layout preset {name!r}; choose from {PRESETS}")
        return cls.for_space(cs, order, data_bits)

    def check(self, cs: CellSpace, n_controls: int, has_none: bool = False):
        if len(self.bits_per_axis) != cs.ndim:
            raise LayoutError("layout and cell space differ in dimension")
        for b, a in zip(self.bits_per_axis, cs.axes):
            if 2**b != a.cells:
                raise LayoutError(f"{b} address bits cannot index {a.cells} cells")
        needed = max(1, int(n_controls - 1).bit_length())
        if self.data_bits < needed:
            raise LayoutError(f"{n_controls} controls need {needed} data bits, layout has {self.data_bits}")
        if has_none and n_controls > self.none_word:
            raise LayoutError("all-ones NONE word collides with a control index; widen data_bits")


def rom_addresses(cs: CellSpace, layout: RomLayout) -> np.ndarray:
    """ROM address of every cell, indexed by flat cell index."""
    coords = cs.coords()
    addr = np.zeros(cs.total, dtype=np.int64)
    for axis in layout.axis_order:
        addr = (addr << layout.bits_per_axis[axis]) | coords[:, axis]
    return addr


def _dtype(layout):
    return {1: np.dtype("u1"), 2: np.dtype("<u2"), 3: None, 4: np.dtype("<u4")}.get(layout.word_bytes)


def export_rom(doc: DocTable, layout: RomLayout) -> bytes:
    cs = doc.cellspace
    has_none = bool(np.any(doc.control_index == NONE))
    layout.check(cs, len(doc.controls), has_none)
    words = np.full(2**layout.address_bits, layout.none_word, dtype=np.int64)
    words[rom_addresses(cs, layout)] = np.where(doc.control_index == NONE, layout.none_word, doc.control_index)
    dt = _dtype(layout)
    if dt is None:
        return b"".join(int(w).to_bytes(layout.word_bytes, "little") for w in words)
    return words.astype(dt).tobytes()


def import_rom(data: bytes, layout: RomLayout, cs: CellSpace) -> np.ndarray:
    """Per-cell control indices (``NONE`` for the all-ones word)."""
    expected = 2**layout.address_bits * layout.word_bytes
    if len(data) != expected:
        raise FormatError(f"ROM image has {len(data)} bytes, layout needs {expected}")
    dt = _dtype(layout)
    if dt is None:
        words = np.array([int.from_bytes(data[i:i + 3], "little") for i in range(0, len(data), 3)])
    else:
        words = np.frombuffer(data, dtype=dt).astype(np.int64)
    ctl = words[rom_addresses(cs, layout)]
    return np.where(ctl == layout.none_word, NONE, ctl)


def rom_manifest(doc: DocTable, layout: RomLayout, image: bytes) -> dict:
    return {
        "magic": "CELLROM1",
        "address_bits": layout.address_bits,
        "data_bits": layout.data_bits,
        "axis_order": list(layout.axis_order),
        "axes": [{"lo": a.lo, "hi": a.hi, "cells": a.cells, "bits": b}
                 for a, b in zip(doc.cellspace.axes, layout.bits_per_axis)],
        "controls": doc.controls.tolist(),
        "checksum_crc32": zlib.crc32(image) & 0xFFFFFFFF,
    }


def write_rom(path, doc: DocTable, layout: RomLayout) -> tuple[Path, Path]:
    """Write ``path`` (raw image) and ``path + '.json'`` (manifest)."""
    path = Path(path)
    image = export_rom(doc, layout)
    path.write_bytes(image)
    man = path.with_name(path.name + ".json")
    man.write_text(json.dumps(rom_manifest(doc, layout, image), indent=2, sort_keys=True) + "\n")
    return path, man


def read_rom(path) -> tuple[np.ndarray, RomLayout, CellSpace, np.ndarray]:
    """Load an image with its manifest; returns ``(control_index, layout, cellspace, controls)``."""
    path = Path(path)
    data = path.read_bytes()
    try:
        man = json.loads(path.with_name(path.name + ".json").read_text())
        if man["magic"] != "CELLROM1":
            raise FormatError("manifest magic mismatch")
        cs = CellSpace([AxisSpec(a["lo"], a["hi"], a["cells"]) for a in man["axes"]])
        layout = RomLayout(man["axis_order"], [a["bits"] for a in man["axes"]], man["data_bits"])
        controls = np.asarray(man["controls"], dtype=float)
        crc = man["checksum_crc32"]
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(f"bad ROM manifest: {e}") from e
    if zlib.crc32(data) & 0xFFFFFFFF != crc:
        raise FormatError("ROM image checksum mismatch")
    return import_rom(data, layout, cs), layout, cs, controls


# -- DOC1 container ---------------------------------------------------------

_MAGIC = b"DOC1"
_KINDS = {CostKind.QUADRATIC_X1U: 0, CostKind.MINIMUM_TIME: 1}


def _index_width(n_controls: int) -> int:
    for w in (1, 2, 4):
        if n_controls < 2 ** (8 * w) - 1:
            return w
    raise FormatError("too many controls")


def save_doc(doc: DocTable, path=None) -> bytes:
    """Serialize to the DOC1 binary layout (little-endian throughout).

    header: magic, n_axes (u32), per axis lo/hi (f64) and cells (u32),
    n_controls and control dim (u32), control values (f64), index width (u8);
    body: control indices (NONE as all-ones), values (f64); trailer: steps
    (i32), cost spec, target cells.
    """
    cs = doc.cellspace
    U = doc.controls
    w = _index_width(len(U))
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", cs.ndim))
    for a in cs.axes:
        buf.write(struct.pack("<ddI", a.lo, a.hi, a.cells))
    buf.write(struct.pack("<II", U.shape[0], U.shape[1]))
    buf.write(U.astype("<f8").tobytes())
    buf.write(struct.pack("<B", w))
    idx = np.where(doc.control_index == NONE, 2 ** (8 * w) - 1, doc.control_index)
    buf.write(idx.astype({1: "u1", 2: "<u2", 4: "<u4"}[w]).tobytes())
    buf.write(doc.value.astype("<f8").tobytes())
    buf.write(doc.steps.astype("<i4").tobytes())
    d = doc.cost.discretize
    buf.write(struct.pack("<BdB", _KINDS[doc.cost.kind], doc.cost.period, d is not None))
    if d is not None:
        buf.write(struct.pack("<Iddd", d.levels, d.lo, d.hi, d.label_offset))
    buf.write(struct.pack("<I", len(doc.target)))
    buf.write(doc.target.astype("<i8").tobytes())
    data = buf.getvalue()
    if path is not None:
        Path(path).write_bytes(data)
    return data


def load_doc(source) -> DocTable:
    data = source if isinstance(source, (bytes, bytearray)) else Path(source).read_bytes()
    buf = io.BytesIO(data)

    def take(fmt):
        size = struct.calcsize(fmt)
        chunk = buf.read(size)
        if len(chunk) != size:
            raise FormatError("truncated DOC1 container")
        return struct.unpack(fmt, chunk)

    def arr(dtype, count):
        dt = np.dtype(dtype)
        chunk = buf.read(dt.itemsize * count)
        if len(chunk) != dt.itemsize * count:
            raise FormatError("truncated DOC1 container")
        return np.frombuffer(chunk, dtype=dt).copy()

    if buf.read(4) != _MAGIC:
        raise FormatError("not a DOC1 container")
    (ndim,) = take("<I")
    axes = [AxisSpec(*take("<ddI")) for _ in range(ndim)]
    cs = CellSpace(axes)
    nu, m = take("<II")
    U = arr("<f8", nu * m).reshape(nu, m)
    (w,) = take("<B")
    if w not in (1, 2, 4):
        raise FormatError(f"bad index width {w}")
    idx = arr({1: "u1", 2: "<u2", 4: "<u4"}[w], cs.total).astype(np.int64)
    idx[idx == 2 ** (8 * w) - 1] = NONE
    value = arr("<f8", cs.total)
    steps = arr("<i4", cs.total).astype(np.int64)
    kind, period, has_d = take("<BdB")
    disc = CostDiscretization(*take("<Iddd")) if has_d else None
    kinds = {v: k for k, v in _KINDS.items()}
    cost = CostSpec(kinds[kind], period, disc)
    (nt,) = take("<I")
    target = arr("<i8", nt).astype(np.int64)
    if buf.read(1):
        raise FormatError("trailing bytes after DOC1 container")
    return DocTable(idx, value, steps, cs, U, cost, target)


# -- text outputs -------------------------------------------------------------

def format_number(v) -> str:
    """9 significant digits, integers without a decimal point."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v == 0:
        return "0"
    return format(v, ".9g")


def _write_lines(path, lines):
    text = "".join(line + "\n" for line in lines)
    if path is not None:
        with open(path, "w", newline="\n") as f:
            f.write(text)
    return text


def _grid_rows(grid):
    g = np.asarray(grid, dtype=object)
    if g.ndim == 1:
        return [list(g)]
    if g.ndim == 2:
        # one row per x2 value, x1 along the row
        return [list(g[:, j]) for j in range(g.shape[1])]
    raise ValueError("grids are written for 1-D and 2-D cell spaces only")


def write_grid(path, grid) -> str:
    return _write_lines(path, [",".join(format_number(v) if not isinstance(v, str) else v for v in row)
                               for row in _grid_rows(grid)])


GRAY = {"P": 0, "T": 0, "C": 96, "A": 128, "G": 128, "B": 192, "S": 255, "U": 255}


def write_pgm(path, grid, gray=None) -> bytes:
    """Binary 8-bit PGM; each code's first letter selects the gray level."""
    gray = {**GRAY, **(gray or {})}
    rows = _grid_rows(grid)
    h, w = len(rows), len(rows[0])
    pix = bytes(gray.get(str(v)[:1], 64) for row in reversed(rows) for v in row)
    data = f"P5\n{w} {h}\n255\n".encode() + pix
    if path is not None:
        Path(path).write_bytes(data)
    return data


def write_curve(path, points) -> str:
    """``param,count,percent`` rows from :class:`SweepPoint` objects or tuples."""
    lines = ["param,count,percent"]
    for p in points:
        param, count, percent = (p.param, p.count, p.percent) if hasattr(p, "param") else p
        lines.append(f"{format_number(param)},{int(count)},{format_number(float(percent))}")
    return _write_lines(path, lines)


def write_trace(path, states, controls=None, costs=None) -> str:
    """``step,x1..xn,u1..um,cost`` per sample; the final state has empty control/cost fields."""
    states = np.asarray(states, dtype=float)
    n = states.shape[1] if states.ndim == 2 else 0
    m = 0 if controls is None or len(controls) == 0 else np.asarray(controls).reshape(len(controls), -1).shape[1]
    header = ["step"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)] + ["cost"]
    lines = [",".join(header)]
    controls = None if m == 0 else np.asarray(controls, dtype=float).reshape(len(controls), m)
    for k in range(len(states)):
        row = [str(k)] + [format_number(v) for v in states[k]]
        if controls is not None:
            row += [format_number(v) for v in controls[k]] if k < len(controls) else [""] * m
        if costs is not None and k < len(costs):
            row.append(format_number(costs[k]))
        else:
            row.append("")
        lines.append(",".join(row))
    return _write_lines(path, lines)


def write_transition_map(path, image, one_based: bool = False) -> str:
    """``cell,image`` rows; SINK stays -1 even with 1-based labels."""
    off = 1 if one_based else 0
    lines = ["cell,image"]
    for c, i in enumerate(np.asarray(image).tolist()):
        lines.append(f"{c + off},{i + off if i >= 0 else -1}")
    return _write_lines(path, lines)


def write_gcm_csv(path, W) -> str:
    """``source,target,probability`` with SINK written as -1."""
    src, dst, p = W.triples()
    lines = ["source,target,probability"]
    lines += [f"{s},{t},{format_number(v)}" for s, t, v in zip(src.tolist(), dst.tolist(), p.tolist())]
    return _write_lines(path, lines)


def doc_csv(path, doc: DocTable) -> str:
    cs = doc.cellspace
    coords = cs.coords()
    zc = [f"z{i + 1}" for i in range(cs.ndim)]
    uc = [f"u{i + 1}" for i in range(doc.controls.shape[1])]
    lines = [",".join(["cell"] + zc + ["control_index"] + uc + ["value", "steps"])]
    for c in range(cs.total):
        j = int(doc.control_index[c])
        u = [format_number(v) for v in doc.controls[j]] if j != NONE else [""] * len(uc)
        val = "inf" if not np.isfinite(doc.value[c]) else format_number(doc.value[c])
        lines.append(",".join([str(c)] + [str(v) for v in coords[c]] + [str(j)] + u + [val, str(int(doc.steps[c]))]))
    return _write_lines(path, lines)
