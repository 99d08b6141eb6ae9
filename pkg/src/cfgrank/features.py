"""The 23-dimensional per-CFG feature vector and its CSV table format.

Layout (frozen): five summary statistics (min, max, mean, median, std) for
each of betweenness, closeness, degree centrality, and shortest-path length,
all over the largest weak component, followed by density, node count, and
edge count of the full graph.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from . import metrics
from .graph import Cfg, induced_subgraph, weak_components

_STATS = ("min", "max", "mean", "median", "std")
_FAMILIES = ("betweenness", "closeness", "degree", "shortest_path")

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{family}_{stat}" for family in _FAMILIES for stat in _STATS
) + ("density", "node_count", "edge_count")

N_FEATURES = len(FEATURE_NAMES)

LABEL_MALICIOUS = "malicious"
LABEL_BENIGN = "benign"


class FeatureTableError(ValueError):
    """Base class for feature-table parse failures."""


class HeaderMismatchError(FeatureTableError):
    pass


class BadValueError(FeatureTableError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"row {row}, column {column!r}: bad value {value!r}")
        self.row = row
        self.column = column


class NonFiniteValueError(FeatureTableError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"row {row}, column {column!r}: non-finite value {value!r}")
        self.row = row
        self.column = column


@dataclass(frozen=True)
class FeatureVector:
    sample_id: str
    values: tuple[float, ...]
    label: str | None = None

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} values, got {len(self.values)}")
        if self.label not in (None, LABEL_MALICIOUS, LABEL_BENIGN):
            raise ValueError(f"bad label {self.label!r}")


def _stat_tuple(s: metrics.PathStats) -> tuple[float, ...]:
    return (s.min, s.max, s.mean, s.median, s.std)


def extract_features(g: Cfg) -> FeatureVector:
    """Compute the frozen 23-entry descriptor of one CFG."""
    largest = induced_subgraph(g, set(weak_components(g).largest_component))
    values: list[float] = []
    for scores in (metrics.betweenness(largest), metrics.closeness(largest),
                   metrics.degree_centrality(largest)):
        values.extend(_stat_tuple(metrics.summary_stats(list(scores.values()))))
    values.extend(_stat_tuple(metrics.shortest_path_stats(largest)))
    values.append(metrics.density(g))
    values.append(float(g.node_count))
    values.append(float(g.edge_count))
    return FeatureVector(sample_id=g.sample_id, values=tuple(values))


def _header() -> list[str]:
    return ["sample_id", *FEATURE_NAMES, "label"]


def write_feature_table(rows: list[FeatureVector]) -> bytes:
    """CSV with the frozen schema; reals carry 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_header())
    for row in rows:
        writer.writerow([row.sample_id,
                         *(f"{v:.17g}" for v in row.values),
                         row.label or ""])
    return buf.getvalue().encode("utf-8")


def parse_feature_table(data: bytes) -> list[FeatureVector]:
    """Parse and validate a feature CSV written by write_feature_table."""
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatchError("empty file") from None
    if header != _header():
        raise HeaderMismatchError(f"unexpected header {header!r}")
    rows: list[FeatureVector] = []
    for rownum, fields in enumerate(reader, start=1):
        if not fields:
            continue
        if len(fields) != N_FEATURES + 2:
            raise BadValueError(rownum, "<row>", f"{len(fields)} fields")
        sample_id = fields[0]
        values = []
        for name, raw in zip(FEATURE_NAMES, fields[1:-1]):
            try:
                v = float(raw)
            except ValueError:
                raise BadValueError(rownum, name, raw) from None
            if not math.isfinite(v):
                raise NonFiniteValueError(rownum, name, raw)
            values.append(v)
        label_raw = fields[-1]
        if label_raw == "":
            label = None
        elif label_raw in (LABEL_MALICIOUS, LABEL_BENIGN):
            label = label_raw
        else:
            raise BadValueError(rownum, "label", label_raw)
        rows.append(FeatureVector(sample_id=sample_id, values=tuple(values), label=label))
    return rows
