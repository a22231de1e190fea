from typing import Union, List, Dict, Optional, Any
import io
import copy
import csv
import json
from enum import Enum

import numpy as np

from .models import BaseModel
from .util import format_float, round_floats


class Method(str, Enum):
    homogeneous = "homogeneous"
    quadrature = "trapped-quadrature"
    mc = "monte-carlo"
    series = "series"


class Weighting(str, Enum):
    isotropic = "isotropic"
    dipole_circular = "dipole-circular"


class SweepVariable(str, Enum):
    t_over_tf = "t_over_tf"
    kf_over_kr = "kf_over_kr"


class Confinement(str, Enum):
    harmonic = "harmonic"
    uniform = "uniform"


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


class Table(BaseModel):
    """Column oriented numeric table.

    Rows hold one value per entry of `columns`; `units` maps a column name to
    its unit string (dimensionless columns may be omitted).

    """
    columns: List[str]
    rows: List[List[float]]
    units: Dict[str, str] = {}

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def records(self) -> List[Dict[str, float]]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def render_matrix(values: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(values):
        writer.writerow([format_float(x) for x in row])
    return buf.getvalue()


def render_json(payload: Dict[str, Any]) -> str:
    return json.dumps(round_floats(copy.deepcopy(payload)), indent=2, sort_keys=True) + "\n"


class OutputSchema:
    """Schema of one output file and its provenance sidecar.

    Args:
        name: File name without extension
        fmt: The output format
        provenance: Provenance block shared by all files of a run
        label: Optional qualifier written into the provenance, e.g.
               `"order-of-magnitude"` for experiment budgets

    """
    def __init__(self, name: str, fmt: Union[str, OutputFormat],
                 provenance: Dict[str, Any],
                 label: Optional[str] = None):
        self.name = name
        self.fmt = OutputFormat(fmt)
        self.provenance = dict(provenance)
        if label is not None:
            self.provenance["label"] = label

    @property
    def filename(self) -> str:
        return f"{self.name}.{self.fmt.value}"

    def _meta(self, **extra: Any) -> Dict[str, Any]:
        return {**self.provenance, "file": self.filename, **extra}

    def content(self, table: Table) -> Dict[str, str]:
        """Return file contents for `table`, keyed by file name.

        CSV tables get a JSON sidecar; JSON tables embed the provenance.

        """
        meta = self._meta(columns=table.columns, units=table.units)
        if self.fmt == OutputFormat.csv:
            return {self.filename: render_csv(table),
                    self.filename + ".json": render_json(meta)}
        return {self.filename: render_json({"provenance": meta,
                                            "columns": table.columns,
                                            "rows": table.rows})}

    def content_matrix(self, values: np.ndarray, pixel_size: float,
                       origin: List[float], units: str) -> Dict[str, str]:
        meta = self._meta(pixel_size_m=pixel_size, origin=list(origin), units=units,
                          shape=list(np.shape(values)))
        if self.fmt == OutputFormat.csv:
            return {self.filename: render_matrix(values),
                    self.filename + ".json": render_json(meta)}
        return {self.filename: render_json({"provenance": meta,
                                            "values": np.asarray(values).tolist()})}

    def content_object(self, payload: Dict[str, Any]) -> Dict[str, str]:
        """JSON report regardless of the requested format."""
        name = f"{self.name}.json"
        return {name: render_json({"provenance": {**self.provenance, "file": name},
                                   **payload})}
