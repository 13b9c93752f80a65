"""CSV and LaTeX emission of experiment tables."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

ROUNDED_COLUMNS = ("rate", "se")
PRECISION = 3

_LATEX_SPECIALS = {
    "\\": r"\textbackslash{}", "&": r"\&", "%": r"\%", "$": r"\$", "#": r"\#",
    "_": r"\_", "{": r"\{", "}": r"\}", "~": r"\textasciitilde{}", "^": r"\textasciicircum{}",
}


@dataclass
class TableArtifact:
    rows: list
    columns: tuple
    caption: str = ""
    name: str = "table"

    @classmethod
    def from_experiment(cls, table, name: str | None = None) -> "TableArtifact":
        return cls(list(table.rows), tuple(table.columns), table.caption, name or table.experiment)

    def formatted_rows(self) -> list[list[str]]:
        if not self.rows:
            raise ValueError("table has no rows")
        return [[format_cell(row.get(c), c in ROUNDED_COLUMNS) for c in self.columns]
                for row in self.rows]


def round_half_even(x: float, digits: int = PRECISION) -> str:
    """Decimal rounding of the shortest repr, so 0.0515 becomes ``0.052``."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    q = Decimal(1).scaleb(-digits)
    out = Decimal(str(float(x))).quantize(q, rounding=ROUND_HALF_EVEN)
    return "0.000" if out.is_zero() else str(out)


def format_cell(value, rounded: bool) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if rounded:
        return round_half_even(value)
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:g}"
    return str(value)


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def csv_text(t: TableArtifact) -> str:
    lines = [",".join(_csv_field(c) for c in t.columns)]
    lines += [",".join(_csv_field(v) for v in row) for row in t.formatted_rows()]
    return "\n".join(lines) + "\n"


def latex_escape(text: str) -> str:
    return "".join(_LATEX_SPECIALS.get(ch, ch) for ch in text)


def latex_text(t: TableArtifact) -> str:
    body = t.formatted_rows()
    align = "".join("r" if c in ROUNDED_COLUMNS or c in ("alpha", "replications", "failures")
                    else "l" for c in t.columns)
    out = ["\\begin{table}[ht]", "\\centering"]
    if t.caption:
        out.append(f"\\caption{{{latex_escape(t.caption)}}}")
    out += [f"\\begin{{tabular}}{{{align}}}", "\\toprule",
            " & ".join(latex_escape(c) for c in t.columns) + " \\\\", "\\midrule"]
    out += [" & ".join(latex_escape(v) for v in row) + " \\\\" for row in body]
    out += ["\\bottomrule", "\\end{tabular}", "\\end{table}"]
    return "\n".join(out) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" keeps the bytes identical across platforms
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def write_csv(t: TableArtifact, path) -> Path:
    return _write(path, csv_text(t))


def write_latex(t: TableArtifact, path) -> Path:
    return _write(path, latex_text(t))


def write_raw(t: TableArtifact, path) -> Path:
    """Full-precision JSON dump of the rows."""
    payload = {"name": t.name, "caption": t.caption, "columns": list(t.columns), "rows": t.rows}
    return _write(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")


def write_table(t: TableArtifact, out_dir, raw: bool = False) -> dict:
    out_dir = Path(out_dir)
    paths = {"csv": write_csv(t, out_dir / f"{t.name}.csv"),
             "tex": write_latex(t, out_dir / f"{t.name}.tex")}
    if raw:
        paths["raw"] = write_raw(t, out_dir / f"{t.name}.json")
    return paths
