"""Bundled reference table of levitated-sensor sensitivities and dark-matter reach."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from importlib import resources

FLAGS = ("measured", "projected", "multi-particle")
FLAG_MARK = {"measured": "†", "projected": "", "multi-particle": "*"}
FORMATS = ("text", "json", "csv")


@dataclass(frozen=True)
class ReferenceEntry:
    levitation_type: str
    sensitivity_a: str  # g/sqrt(Hz)
    sensitivity_f: str  # N/sqrt(Hz)
    candidate: str
    parameter_space: str
    mass_range: str
    flag: str

    def __post_init__(self):
        if self.flag not in FLAGS:
            raise ValueError(f"flag must be one of {FLAGS}")


def load_reference() -> tuple[ReferenceEntry, ...]:
    raw = json.loads(resources.files("levidm").joinpath("data/table1.json").read_text("utf-8"))
    cols = raw["columns"]
    return tuple(ReferenceEntry(**dict(zip(cols, row))) for row in raw["entries"])


def format_table(entries, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps([asdict(e) for e in entries], indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(asdict(entries[0])))
        for e in entries:
            w.writerow(list(asdict(e).values()))
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    header = ("System", "sqrt(S_a) [g/sqrt(Hz)]", "sqrt(S_F) [N/sqrt(Hz)]", "Candidate",
              "Parameter space", "[Mass range]")
    rows = []
    for e in entries:
        mass = f"[{e.mass_range}]" if e.mass_range else ""
        rows.append((e.levitation_type, e.sensitivity_a, e.sensitivity_f, e.candidate,
                     e.parameter_space, mass + FLAG_MARK[e.flag]))
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]

    def line(cells):
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    out = [line(header), "-+-".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    out.append("† measured, * multiple trapped particles, otherwise projected")
    return "\n".join(out) + "\n"
