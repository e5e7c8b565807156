"""CSV and plain-text outputs.  Floats are written with ``repr`` so reruns are byte-identical."""

from __future__ import annotations

import csv
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import AttributionField, ScanResult
from .spatial import SpatialDataset


def fmt(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def fmt_bandwidth(b) -> str:
    return str(int(b)) if isinstance(b, (int, np.integer)) else fmt(b)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_attributions(path, ds: SpatialDataset, fld: AttributionField) -> None:
    """Long format: one row per (point, feature, explainer)."""
    fields = fld.explainer_fields()
    if fld.coefficients is not None:
        fields["coefficient"] = fld.coefficients[:, :-1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["id", "feature", "explainer", "value"])
        for i, pid in enumerate(ds.ids):
            for name, values in fields.items():
                for j, feat in enumerate(ds.feature_names):
                    w.writerow([pid, feat, name, fmt(values[i, j])])


def write_predictions(path, ds: SpatialDataset, fld: AttributionField) -> None:
    cols = {"y": ds.response, "fit": fld.predictions}
    if fld.loo is not None:
        cols["loo"] = fld.loo
    if fld.shap_base is not None:
        cols["shap_base"] = fld.shap_base
    if fld.lime_intercept is not None:
        cols["lime_intercept"] = fld.lime_intercept
    if fld.coefficients is not None:
        cols["intercept"] = fld.coefficients[:, -1]
    write_columns(path, ds.ids, cols)


def write_columns(path, ids: Sequence[str], columns: Mapping[str, np.ndarray]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["id", *columns])
        for i, pid in enumerate(ids):
            w.writerow([pid, *(fmt(c[i]) for c in columns.values())])


def write_pd(path, ds: SpatialDataset, fld: AttributionField) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["feature", "bin", "grid", "mean"])
        for j in sorted(fld.pd):
            grid, means = fld.pd_curve(j)
            for b, (g, m) in enumerate(zip(grid, means)):
                w.writerow([ds.feature_names[j], b, fmt(g), fmt(m)])


def write_scans(path, scans: Iterable[ScanResult], feature_names: Sequence[str]) -> None:
    scans = list(scans)
    explainers = sorted({name for s in scans for name in s.correlations})
    header = ["kind", "mode", "bandwidth", "r2", "chosen"]
    header += [f"corr_{e}_{f}" for e in explainers for f in feature_names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(header)
        for s in scans:
            chosen = s.chosen
            for g, bw in enumerate(s.bandwidths):
                row = [s.kernel.kind, s.kernel.mode, fmt_bandwidth(bw), fmt(s.r2[g]), int(bw == chosen)]
                for e in explainers:
                    c = s.correlations.get(e)
                    row += [fmt(c[g, j]) if c is not None else "nan" for j in range(len(feature_names))]
                w.writerow(row)


def read_scans(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def read_columns(path) -> dict[str, list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {}
    return {k: [r[k] for r in rows] for k in rows[0]}


def format_report(config_echo: str, results: Mapping[str, object], title: str = "run report") -> str:
    """Config echo followed by ``result.*`` lines; loadable again as a config file."""
    lines = [f"# xgeoml {title}\n", config_echo]
    for key, value in results.items():
        if isinstance(value, (float, np.floating)):
            value = fmt(value)
        lines.append(f"result.{key} = {value}\n")
    return "".join(lines)


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
