"""Device files, CSV import/export and number formatting for the CLI."""
from __future__ import annotations

import csv
import io
import math
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, TextIO, Tuple

import numpy as np

from .errors import ConfigError, QDelayError
from .params import MHZ, AtomParams

DEVICE_KEYS = (
    "omega_10_mhz", "gamma_r_10_mhz", "gamma_10_mhz", "gamma_n_10_mhz", "k_10",
    "gamma_r_21_mhz", "gamma_20_mhz", "gamma_n_20_mhz", "gamma_21_mhz",
)
BUILTIN_DEVICES = ("device1a", "device1b", "device2")

GRID_COLUMNS = ("axis1", "delta_p_mhz", "re_r", "im_r", "abs_r", "phase_rad",
                "tau_d_ns", "singular")
TRACE_COLUMNS = ("t_ns", "re_in", "im_in", "re_out", "im_out", "abs_in", "abs_out")
SUMMARY_COLUMNS = ("param", "tau_d_ns", "confidence", "residual_ratio")


def fmt(x) -> str:
    """Nine significant digits; booleans as 0/1."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


# ---------------------------------------------------------------------------
# Device parameter files
# ---------------------------------------------------------------------------

def parse_kv(text: str, source: str = "<string>") -> Dict[str, float]:
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in DEVICE_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} is not a number: {val!r}") from None
    return values


def atom_from_mapping(values: Dict[str, float], source: str = "<config>") -> AtomParams:
    if "omega_10_mhz" not in values:
        raise ConfigError(f"{source}: missing omega_10_mhz")
    kw = {k: values.get(k) for k in DEVICE_KEYS}
    try:
        return AtomParams.from_mhz(**kw)
    except QDelayError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_device(name_or_path: str) -> AtomParams:
    """Load a device file, or one of the bundled devices by name."""
    if name_or_path in BUILTIN_DEVICES:
        text = resources.files("qdelay").joinpath("devices").joinpath(f"{name_or_path}.cfg").read_text("utf-8")
        return atom_from_mapping(parse_kv(text, name_or_path), name_or_path)
    path = Path(name_or_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read device file {name_or_path}: {exc.strerror}") from None
    return atom_from_mapping(parse_kv(text, name_or_path), name_or_path)


def dump_device(atom: AtomParams) -> str:
    lines = [f"omega_10_mhz = {atom.omega_10 / MHZ!r}",
             f"gamma_r_10_mhz = {atom.gamma_r_10 / MHZ!r}",
             f"gamma_10_mhz = {atom.gamma_10 / MHZ!r}"]
    if atom.k_10 is not None:
        lines.append(f"k_10 = {atom.k_10!r}")
    lines.append(f"gamma_r_21_mhz = {atom.gamma_r_21 / MHZ!r}")
    if atom.gamma_20 is not None:
        lines.append(f"gamma_20_mhz = {atom.gamma_20 / MHZ!r}")
    lines.append(f"gamma_21_mhz = {atom.gamma_21 / MHZ!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CSV input
# ---------------------------------------------------------------------------

def read_table(source, name: str = None) -> Dict[str, np.ndarray]:
    """Read a numeric CSV with a header row; ``#`` lines are skipped.

    ``source`` is a path or an open text stream. Errors carry line numbers.
    """
    if hasattr(source, "read"):
        text = source.read()
        name = name or getattr(source, "name", "<stdin>")
    else:
        name = name or str(source)
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {name}: {exc.strerror}") from None
    header = None
    rows: List[List[float]] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in row]
        if header is None:
            header = cells
            continue
        if len(cells) != len(header):
            raise ConfigError(f"{name}:{lineno}: expected {len(header)} fields, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ConfigError(f"{name}:{lineno}: non-numeric field in {row!r}") from None
    if header is None or not rows:
        raise ConfigError(f"{name}: no data rows")
    data = np.array(rows, dtype=float)
    return {h: data[:, i] for i, h in enumerate(header)}


def _complex_column(table, name) -> np.ndarray:
    if "re_r" in table and "im_r" in table:
        return table["re_r"] + 1j * table["im_r"]
    if "abs_r" in table and "phase_rad" in table:
        return table["abs_r"] * np.exp(1j * table["phase_rad"])
    raise ConfigError(f"{name}: need columns re_r,im_r or abs_r,phase_rad")


def _pick(table, options, name) -> Tuple[str, np.ndarray]:
    for key in options:
        if key in table:
            return key, table[key]
    raise ConfigError(f"{name}: missing column (one of {', '.join(options)})")


def read_spectrum_csv(source, name: str = None) -> Tuple[str, np.ndarray, np.ndarray]:
    """Return (axis column name, axis in MHz, complex r) sorted by frequency."""
    name = name or str(getattr(source, "name", source))
    table = read_table(source, name)
    axis_name, f = _pick(table, ("freq_mhz", "delta_p_mhz"), name)
    r = _complex_column(table, name)
    order = np.argsort(f, kind="stable")
    f, r = f[order], r[order]
    if np.any(np.diff(f) <= 0):
        raise ConfigError(f"{name}: duplicate frequencies")
    return axis_name, f, r


def read_power_csv(source, name: str = None) -> Tuple[np.ndarray, np.ndarray]:
    name = name or str(getattr(source, "name", source))
    table = read_table(source, name)
    _, p = _pick(table, ("p_dbm", "pp_dbm"), name)
    return p, _complex_column(table, name)


def read_map_csv(source, name: str = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (pc_dbm, delta_p_mhz, r[pc, delta]) from a long-format map."""
    name = name or str(getattr(source, "name", source))
    table = read_table(source, name)
    _, pc = _pick(table, ("pc_dbm", "axis1"), name)
    _, dp = _pick(table, ("delta_p_mhz",), name)
    r = _complex_column(table, name)
    pcs = np.unique(pc)
    dps = np.unique(dp)
    grid = np.full((pcs.size, dps.size), np.nan + 0j)
    grid[np.searchsorted(pcs, pc), np.searchsorted(dps, dp)] = r
    if np.any(np.isnan(grid.real)):
        raise ConfigError(f"{name}: map is not a complete rectangular grid")
    return pcs, dps, grid


def load_atom_table(source, base: AtomParams = None) -> List[AtomParams]:
    """Rows of (omega_10_mhz, gamma_r_10_mhz, gamma_10_mhz) as AtomParams.

    Other device keys present as columns are honoured; missing ones come from
    ``base`` when given.
    """
    name = str(getattr(source, "name", source))
    table = read_table(source, name)
    for key in ("omega_10_mhz", "gamma_r_10_mhz", "gamma_10_mhz"):
        if key not in table:
            raise ConfigError(f"{name}: missing column {key}")
    atoms = []
    n = table["omega_10_mhz"].size
    for i in range(n):
        values = {k: float(v[i]) for k, v in table.items() if k in DEVICE_KEYS}
        if base is not None and base.k_10 is not None:
            values.setdefault("k_10", base.k_10)
        atoms.append(atom_from_mapping(values, f"{name} row {i + 1}"))
    atoms.sort(key=lambda a: a.omega_10)
    return atoms


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def header_block(atom: AtomParams, extra: Iterable[Tuple[str, object]] = ()) -> List[str]:
    lines = [f"# omega_10_mhz = {fmt(atom.omega_10 / MHZ)}",
             f"# gamma_r_10_mhz = {fmt(atom.gamma_r_10 / MHZ)}",
             f"# gamma_10_mhz = {fmt(atom.gamma_10 / MHZ)}",
             f"# gamma_n_10_mhz = {fmt(atom.gamma_n_10 / MHZ)}"]
    if atom.k_10 is not None:
        lines.append(f"# k_10 = {fmt(atom.k_10)}")
    lines.append(f"# gamma_r_21_mhz = {fmt(atom.gamma_r_21 / MHZ)}")
    if atom.gamma_20 is not None:
        lines.append(f"# gamma_20_mhz = {fmt(atom.gamma_20 / MHZ)}")
        lines.append(f"# gamma_n_20_mhz = {fmt(atom.gamma_n_20 / MHZ)}")
    lines.append(f"# gamma_21_mhz = {fmt(atom.gamma_21 / MHZ)}")
    for k, v in extra:
        lines.append(f"# {k} = {fmt(v) if not isinstance(v, str) else v}")
    return lines


def write_rows(out: TextIO, header: Sequence[str], columns: Sequence[str],
               rows: Iterable[Sequence]) -> None:
    for line in header:
        out.write(line + "\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")


def grid_rows(axis1, detunings, r, tau_d, singular):
    """Rows for the grid CSV; ``r``/``tau_d``/``singular`` are 2D [axis1, detuning]."""
    for i, a in enumerate(axis1):
        for j, d in enumerate(detunings):
            z = complex(r[i, j])
            yield (a, d / MHZ, z.real, z.imag, abs(z), math.atan2(z.imag, z.real),
                   tau_d[i, j] * 1e9, bool(singular[i, j]))
