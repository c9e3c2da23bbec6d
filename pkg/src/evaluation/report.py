"""
評估報告模組

EvalReport 以完整精度儲存（JSON，與清單同一格式）；只有顯示時才四捨五入到一位小數。
delta_report 比較兩份報告並標示改善（錯誤率下降）；
benchmark_table 將多份報告並列為 "44.1 (-6.2)" 樣式的表格。
"""

import json
import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd

from evaluation.metrics import CorruptionErrorMatrix, mce as compute_mce
from evaluation.predictions import EvaluationError
from utils.file_ops import atomic_write_json, atomic_write_text
from utils.version import __version__


logger = logging.getLogger(__name__)

REPORT_FIELDS = ["model_id", "dataset_id", "clean_error"]

_ONE_DECIMAL = Decimal("0.1")

# mce 與 clean_error 的重算容差
_RECOMPUTE_TOLERANCE = 1e-9


def round_display(value: float) -> Decimal:
    """以十進位表示四捨五入（遠離零）到一位小數"""
    return Decimal(repr(float(value))).quantize(_ONE_DECIMAL, rounding=ROUND_HALF_UP)


def format_value(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    rounded = round_display(value)
    return "0.0" if rounded == 0 else f"{rounded:.1f}"


def format_delta(delta: float) -> str:
    """帶正負號的一位小數差值；四捨五入後為零時顯示 ±0.0"""
    rounded = round_display(delta)
    if rounded == 0:
        return "±0.0"
    return f"{rounded:+.1f}"


@dataclass
class EvalReport:
    """
    一個模型在一個測試集上的評估結果

    clean_error、mce 為百分比；normalized_mce 為比值（顯示時乘以 100）。
    有錯誤矩陣時 mce 必須等於矩陣的未加權平均。
    """
    model_id: str
    dataset_id: str
    clean_error: float
    matrix: Optional[CorruptionErrorMatrix] = None
    mce: Optional[float] = None
    normalized_mce: Optional[float] = None
    profile: Optional[str] = None
    toolkit_version: str = __version__
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= float(self.clean_error) <= 100.0:
            raise EvaluationError(f"clean_error 超出 [0,100]: {self.clean_error}", field="clean_error",
                                  value=self.clean_error)
        self.clean_error = float(self.clean_error)
        if self.matrix is None:
            if self.mce is not None or self.normalized_mce is not None:
                raise EvaluationError("沒有錯誤矩陣的報告不能有 mCE", field="mce", value=self.mce)
            return
        plain, _ = compute_mce(self.matrix)
        if self.mce is None:
            self.mce = plain
        elif abs(float(self.mce) - plain) > _RECOMPUTE_TOLERANCE:
            raise EvaluationError(f"mCE {self.mce} 與錯誤矩陣重算值 {plain} 不一致", field="mce",
                                  value=self.mce)
        self.mce = float(self.mce)

    def metrics(self) -> Dict[str, float]:
        """
        報告中的所有錯誤指標（顯示尺度的百分比）

        名稱：clean_error、mce、normalized_mce、category.<分類>、kind.<損壞>
        """
        values = {"clean_error": self.clean_error}
        if self.matrix is not None:
            values["mce"] = self.mce
            if self.normalized_mce is not None:
                values["normalized_mce"] = 100.0 * self.normalized_mce
            for name, value in self.matrix.category_means().items():
                values[f"category.{name}"] = value
            for name, value in self.matrix.kind_means().items():
                values[f"kind.{name}"] = value
        return values

    def to_dict(self) -> dict:
        data = {
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "profile": self.profile,
            "toolkit_version": self.toolkit_version,
            "clean_error": self.clean_error,
            "mce": self.mce,
            "normalized_mce": self.normalized_mce,
            "matrix": self.matrix.to_dict() if self.matrix is not None else None,
            "metadata": dict(self.metadata),
        }
        if self.matrix is not None:
            data["breakdown"] = {"categories": self.matrix.category_means(),
                                 "kinds": self.matrix.kind_means()}
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        missing = [name for name in REPORT_FIELDS if name not in data]
        if missing:
            raise EvaluationError(f"評估報告缺少欄位: {', '.join(missing)}", field=missing[0])
        matrix = CorruptionErrorMatrix.from_dict(data["matrix"]) if data.get("matrix") else None
        return cls(
            model_id=str(data["model_id"]),
            dataset_id=str(data["dataset_id"]),
            clean_error=data["clean_error"],
            matrix=matrix,
            mce=data.get("mce"),
            normalized_mce=data.get("normalized_mce"),
            profile=data.get("profile"),
            toolkit_version=str(data.get("toolkit_version", "")),
            metadata=dict(data.get("metadata") or {}),
        )


def build_eval_report(model_id: str, dataset_id: str, clean_error: float,
                      matrix: Optional[CorruptionErrorMatrix] = None,
                      baseline: Optional[CorruptionErrorMatrix] = None,
                      profile: Optional[str] = None,
                      metadata: Optional[Mapping[str, str]] = None) -> EvalReport:
    """由乾淨錯誤率與（可選的）錯誤矩陣建立報告；提供 baseline 時一併計算正規化 mCE"""
    normalized = None
    plain = None
    if matrix is not None:
        plain, normalized = compute_mce(matrix, baseline)
    elif baseline is not None:
        raise EvaluationError("提供基準矩陣時必須有錯誤矩陣", field="baseline")
    return EvalReport(model_id=model_id, dataset_id=dataset_id, clean_error=clean_error, matrix=matrix,
                      mce=plain, normalized_mce=normalized, profile=profile, metadata=dict(metadata or {}))


def write_report(report: EvalReport, path: Union[str, Path]) -> Path:
    """原子寫入報告 JSON（浮點數以完整精度儲存）"""
    target = Path(path)
    atomic_write_json(target, report.to_dict())
    logger.info(f"評估報告已寫入: {target}")
    return target


def load_report(path: Union[str, Path]) -> EvalReport:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"評估報告不存在: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise EvaluationError(f"評估報告解析失敗: {path} ({e})", field="report", value=str(path))
    if not isinstance(data, dict):
        raise EvaluationError(f"評估報告必須是物件: {path}", field="report", value=str(path))
    return EvalReport.from_dict(data)


@dataclass(frozen=True)
class DeltaRow:
    """單一指標的差值"""
    metric: str
    before: float
    after: float
    delta: float
    display: str
    improved: bool
    relative: Optional[float]

    def to_dict(self) -> dict:
        return {"metric": self.metric, "before": self.before, "after": self.after, "delta": self.delta,
                "display": self.display, "improved": self.improved, "relative_percent": self.relative}


@dataclass(frozen=True)
class DeltaReport:
    before_model: str
    after_model: str
    dataset_id: str
    rows: List[DeltaRow]

    def row(self, metric: str) -> DeltaRow:
        for row in self.rows:
            if row.metric == metric:
                return row
        raise KeyError(metric)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "metric": row.metric,
            "before": format_value(row.before),
            "after": format_value(row.after),
            "delta": row.display,
            "relative": format_delta(row.relative) + "%" if row.relative is not None else "-",
            "improved": "yes" if row.improved else "no",
        } for row in self.rows])

    def to_dict(self) -> dict:
        return {"before_model": self.before_model, "after_model": self.after_model,
                "dataset_id": self.dataset_id, "rows": [row.to_dict() for row in self.rows]}

    def render(self) -> str:
        """終端機顯示用的文字表格"""
        return self.to_frame().to_string(index=False)


def delta_report(before: EvalReport, after: EvalReport) -> DeltaReport:
    """
    比較兩份報告：delta = after − before

    錯誤指標下降（四捨五入後 < 0）標示為改善；相對變化以 before 的百分比表示。

    Raises:
        EvaluationError: 測試集或設定檔不同、指標集合不同
    """
    if before.dataset_id != after.dataset_id:
        raise EvaluationError(f"報告的測試集不同: {before.dataset_id} / {after.dataset_id}",
                              field="dataset_id", value=[before.dataset_id, after.dataset_id])
    if before.profile != after.profile:
        raise EvaluationError(f"報告的設定檔不同: {before.profile} / {after.profile}",
                              field="profile", value=[before.profile, after.profile])
    first, second = before.metrics(), after.metrics()
    if set(first) != set(second):
        differing = sorted(set(first) ^ set(second))
        raise EvaluationError(f"報告的指標集合不同: {', '.join(differing)}", field="metrics", value=differing)

    rows = []
    for metric, old in first.items():
        new = second[metric]
        delta = new - old
        rounded = round_display(delta)
        rows.append(DeltaRow(metric=metric, before=old, after=new, delta=delta, display=format_delta(delta),
                             improved=rounded < 0,
                             relative=100.0 * delta / old if old != 0 else None))
    logger.debug(f"差值報告: {before.model_id} → {after.model_id}，{len(rows)} 項指標")
    return DeltaReport(before.model_id, after.model_id, before.dataset_id, rows)


def benchmark_table(reports: Mapping[str, EvalReport], baseline: str,
                    metrics: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    並列多份報告：基準列顯示數值，其他列顯示 "數值 (差值)"

    Args:
        reports: 列名稱 → 報告（依插入順序輸出）
        baseline: 作為差值基準的列名稱
        metrics: 欄位指標（預設為基準報告的 clean_error 與 mce）

    Returns:
        以列名稱為索引的 DataFrame
    """
    if baseline not in reports:
        raise EvaluationError(f"基準報告不存在: {baseline}", field="baseline", value=baseline)
    reference = reports[baseline].metrics()
    columns = list(metrics) if metrics else [name for name in ("clean_error", "mce") if name in reference]

    table = {}
    for name, report in reports.items():
        values = report.metrics()
        cells = {}
        for metric in columns:
            if metric not in values or metric not in reference:
                raise EvaluationError(f"報告 {name} 沒有指標 {metric}", field="metrics", value=metric)
            if name == baseline:
                cells[metric] = format_value(values[metric])
            else:
                cells[metric] = f"{format_value(values[metric])} ({format_delta(values[metric] - reference[metric])})"
        table[name] = cells
    return pd.DataFrame.from_dict(table, orient="index", columns=columns)


def write_table_csv(frame: pd.DataFrame, path: Union[str, Path], index: bool = True) -> Path:
    """原子寫入 CSV 表格"""
    return atomic_write_text(path, frame.to_csv(index=index, lineterminator="\n"))
