"""
File formats shared by the pipelines.

  instances      YAML: k, seed, index, coupling_bound, couplings, ground_state, degenerate
  tables         CSV preceded by a block of "# key: value" metadata lines
  spin matrices  headerless CSV, K rows of K entries in {-1, +1}
  frames         long CSV of matrix snapshots: iteration, row, c1..cK
  code dumps     plain text, one 0/1 digit row per matrix row
"""
from __future__ import annotations
import os
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .channels import Instance
from .errors import MissingArtifactError, ParseError
from .parity_code import LogicalState, PECode, SpinMatrix


def _ensure_parent(path: Path) -> None:
    os.makedirs(Path(path).parent, exist_ok=True)


# ---------- instances ----------
def instance_to_dict(inst: Instance, index: int | None = None) -> dict:
    return {
        "k": int(inst.k),
        "seed": None if inst.seed is None else int(inst.seed),
        "index": index,
        "coupling_bound": None if inst.coupling_bound is None else float(inst.coupling_bound),
        "couplings": [float(v) for v in inst.couplings],
        "ground_state": None if inst.ground_state is None else [int(v) for v in inst.ground_state.spins],
        "degenerate": inst.degenerate,
    }


def save_instance(inst: Instance, path: Path, index: int | None = None) -> Path:
    path = Path(path)
    _ensure_parent(path)
    with open(path, "w") as f:
        yaml.safe_dump(instance_to_dict(inst, index), f, sort_keys=False)
    return path


def load_instance(path: Path) -> Instance:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"instance file not found: {path}")
    with open(path) as f:
        try:
            doc = yaml.load(f, Loader=yaml.SafeLoader)
        except yaml.YAMLError as e:
            raise ParseError(f"{path}: not valid YAML ({e})") from e
    if not isinstance(doc, dict) or "k" not in doc or "couplings" not in doc:
        raise ParseError(f"{path}: expected a mapping with 'k' and 'couplings'")
    gs = doc.get("ground_state")
    try:
        return Instance(
            k=int(doc["k"]),
            couplings=np.array(doc["couplings"], dtype=np.float64),
            ground_state=None if gs is None else LogicalState(np.array(gs)),
            seed=doc.get("seed"),
            coupling_bound=doc.get("coupling_bound"),
            degenerate=doc.get("degenerate"),
        )
    except (ValueError, TypeError) as e:
        raise ParseError(f"{path}: {e}") from e


# ---------- tables with a metadata header ----------
def write_table(df: pd.DataFrame, path: Path, meta: dict | None = None) -> Path:
    path = Path(path)
    _ensure_parent(path)
    with open(path, "w", newline="") as f:
        for key, value in (meta or {}).items():
            f.write(f"# {key}: {value}\n")
        df.to_csv(f, index=False, lineterminator="\n")
    return path


def read_table(path: Path) -> tuple[dict, pd.DataFrame]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"table not found: {path}")
    meta: dict = {}
    body = []
    with open(path) as f:
        for line in f:
            if not body and line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = value
            else:
                body.append(line)
    return meta, pd.read_csv(StringIO("".join(body)))


# ---------- spin matrices ----------
def write_spin_matrix(x: SpinMatrix, path: Path) -> Path:
    path = Path(path)
    _ensure_parent(path)
    pd.DataFrame(x.entries.astype(int)).to_csv(path, header=False, index=False, lineterminator="\n")
    return path


def read_spin_matrix(path: Path, k: int | None = None) -> SpinMatrix:
    """Parse a +/-1 CSV; every error names the 1-based row/column it found."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"state file not found: {path}")
    try:
        raw = pd.read_csv(path, header=None, dtype=str, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: ragged rows ({e})") from e
    except pd.errors.EmptyDataError as e:
        raise ParseError(f"{path}: empty file") from e
    n_rows, n_cols = raw.shape
    if n_rows != n_cols:
        raise ParseError(f"{path}: expected a square matrix, got {n_rows} rows x {n_cols} columns")
    if k is not None and n_rows != k:
        raise ParseError(f"{path}: declared K={k} but the file has {n_rows} rows")
    a = np.empty((n_rows, n_cols), dtype=np.int8)
    for r in range(n_rows):
        for c in range(n_cols):
            cell = raw.iat[r, c]
            cell = "" if pd.isna(cell) else str(cell).strip()
            if cell in ("1", "+1"):
                a[r, c] = 1
            elif cell == "-1":
                a[r, c] = -1
            else:
                raise ParseError(f"{path}: row {r + 1}, column {c + 1}: expected +1 or -1, got {cell!r}")
    for r in range(n_rows):
        if a[r, r] != 1:
            raise ParseError(f"{path}: row {r + 1}, column {r + 1}: diagonal entry must be +1")
    bad = np.argwhere(a != a.T)
    if bad.size:
        r, c = bad[0]
        raise ParseError(f"{path}: row {r + 1}, column {c + 1}: matrix is not symmetric")
    return SpinMatrix(a)


def write_frames(frames: list[SpinMatrix], path: Path, meta: dict | None = None) -> Path:
    k = frames[0].k
    rows = []
    for it, x in enumerate(frames):
        for r in range(k):
            rows.append([it, r + 1, *x.entries[r].astype(int).tolist()])
    df = pd.DataFrame(rows, columns=["iteration", "row", *[f"c{c + 1}" for c in range(k)]])
    return write_table(df, path, meta)


def write_grid(m: np.ndarray, path: Path, meta: dict | None = None) -> Path:
    k = m.shape[0]
    df = pd.DataFrame(m, columns=[f"c{c + 1}" for c in range(k)])
    df.insert(0, "row", np.arange(1, k + 1))
    return write_table(df, path, meta)


# ---------- code dumps ----------
def _digits(m: np.ndarray) -> list[str]:
    return ["".join(str(int(v)) for v in row) for row in m]


def dump_code(code: PECode, path: Path) -> Path:
    path = Path(path)
    _ensure_parent(path)
    lines = [f"# K={code.k} n_v={code.params.n_v} n_c3={code.params.n_c3} n_c4={code.params.n_c4}"]
    for name, m in (("generator", code.generator), ("check4", code.check4), ("check3", code.check3)):
        lines.append(f"# {name} {m.shape[0]}x{m.shape[1]}")
        lines.extend(_digits(m))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_code_dump(path: Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"code dump not found: {path}")
    out: dict[str, list] = {}
    name = None
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if line.startswith("# "):
            head = line[2:].split()
            name = head[0] if head and not head[0].startswith("K=") else None
            if name:
                out[name] = []
            continue
        if name is None or set(line) - {"0", "1"}:
            raise ParseError(f"{path}: line {n}: expected a row of 0/1 digits")
        out[name].append([int(ch) for ch in line])
    return {key: np.array(rows, dtype=np.uint8) for key, rows in out.items()}
