"""Material database file.

Schema::

    <materials>
      <material name="air">
        <density>1.204</density>
        <speedOfSound>343.4</speedOfSound>
      </material>
    </materials>
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from ..errors import FormatError, IncompleteMaterial


@dataclass(frozen=True)
class Material:
    name: str
    density: float
    speed_of_sound: float

    def __post_init__(self):
        if not (self.density > 0 and self.speed_of_sound > 0):
            raise IncompleteMaterial(
                f"material {self.name!r}: density and speed of sound must be positive"
            )


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_material_text(text: str) -> dict[str, Material]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise FormatError(f"material file is not well-formed XML: {exc}") from None
    out = {}
    for mat in root.iter():
        if _local(mat.tag) != "material":
            continue
        name = mat.get("name")
        if not name:
            raise IncompleteMaterial("material entry without a name attribute")
        values = {_local(c.tag): (c.text or "").strip() for c in mat}
        try:
            rho = float(values["density"])
            c = float(values["speedOfSound"])
        except KeyError as exc:
            raise IncompleteMaterial(f"material {name!r} lacks {exc.args[0]}") from None
        except ValueError as exc:
            raise IncompleteMaterial(f"material {name!r}: {exc}") from None
        out[name] = Material(name, rho, c)
    return out


def parse_material(path) -> dict[str, Material]:
    return parse_material_text(Path(path).read_text())


def write_material(path, materials) -> None:
    lines = ["<?xml version=\"1.0\"?>", "<materials>"]
    for m in materials:
        lines += [
            f"  <material name=\"{m.name}\">",
            f"    <density>{m.density!r}</density>",
            f"    <speedOfSound>{m.speed_of_sound!r}</speedOfSound>",
            "  </material>",
        ]
    lines.append("</materials>")
    Path(path).write_text("\n".join(lines) + "\n")
