"""
Writers for evaluation reports, training histories and model comparison tables.

CSV files start with a `# config=` comment line that carries the resolved run config.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from schemas.reports import EpochRecord, EvaluationReport

logger = logging.getLogger(__name__)

UNDEFINED = "n/a"


def config_line(config: Dict[str, Any]) -> str:
    return "# config=" + json.dumps(config, sort_keys=True, separators=(",", ":"))


def _percent(value: Optional[float]) -> str:
    return UNDEFINED if value is None else f"{100.0 * value:.1f}"


def write_history_csv(history: Sequence[EpochRecord], path: Union[str, Path], config: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = list(EpochRecord.model_fields)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(config_line(config or {}) + "\n")
        writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for record in history:
            writer.writerow({k: ("" if v is None else repr(v)) for k, v in record.model_dump().items()})
    return path


def write_confusion_csv(report: EvaluationReport, path: Union[str, Path]) -> Path:
    """Rows are observed genres, columns predicted genres, both in canonical order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(config_line(report.config) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["observed\\predicted", *report.genres])
        for genre, row in zip(report.genres, report.confusion):
            writer.writerow([genre, *row])
    return path


def format_report(report: EvaluationReport) -> str:
    """Overall top-k line, then one row per genre: support, correct, top-1 accuracy."""
    lines = [
        f"Model: {report.model_name or '-'}    split: {report.split}    records: {report.num_records}",
        "  ".join(f"Top {k}: {_percent(v)}%" for k, v in sorted(report.top_k_accuracy.items())),
        "",
        f"{'Genre':<14} {'Support':>8} {'Correct':>8} {'Top 1 (%)':>10}",
    ]
    for g, genre in enumerate(report.genres):
        lines.append(
            f"{genre:<14} {report.support[g]:>8} {report.confusion[g][g]:>8} {_percent(report.per_genre_accuracy[g]):>10}"
        )
    if report.top_confusions:
        lines += ["", "Most frequent confusions (observed -> predicted):"]
        lines += [f"  {p.observed} -> {p.predicted}: {p.count}" for p in report.top_confusions]
    return "\n".join(lines) + "\n"


def write_report(report: EvaluationReport, out_dir: Union[str, Path], stem: str = "report") -> Dict[str, Path]:
    """Writes <stem>.json, <stem>.txt and <stem>_confusion.csv into `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / f"{stem}.json",
        "table": out / f"{stem}.txt",
        "confusion": out / f"{stem}_confusion.csv",
    }
    paths["json"].write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    paths["table"].write_text(format_report(report), encoding="utf-8")
    write_confusion_csv(report, paths["confusion"])
    logger.info("Report files written to %s.", out)
    return paths


def load_report(path: Union[str, Path]) -> EvaluationReport:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Evaluation report not found: {path}")
    return EvaluationReport.model_validate_json(path.read_text(encoding="utf-8"))


def format_comparison(reports: Sequence[EvaluationReport]) -> str:
    """Two tables with one column per model: overall top-1/top-3, then per-genre top-1."""
    names = [r.model_name or f"model{i + 1}" for i, r in enumerate(reports)]
    width = max([12] + [len(n) for n in names]) + 2
    ks = sorted({k for r in reports for k in r.top_k_accuracy})

    lines: List[str] = [f"{'Model':<{width}}" + "".join(f"{'Top ' + str(k) + ' (%)':>12}" for k in ks)]
    for name, report in zip(names, reports):
        lines.append(f"{name:<{width}}" + "".join(f"{_percent(report.top_k_accuracy.get(k)):>12}" for k in ks))

    lines += ["", f"{'Genre':<14}" + "".join(f"{n:>{width}}" for n in names)]
    genres = reports[0].genres if reports else []
    for g, genre in enumerate(genres):
        cells = [_percent(r.per_genre_accuracy[g]) if g < len(r.per_genre_accuracy) else UNDEFINED for r in reports]
        lines.append(f"{genre:<14}" + "".join(f"{c:>{width}}" for c in cells))
    return "\n".join(lines) + "\n"
