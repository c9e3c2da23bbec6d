"""
錯誤率指標模組

- clean_error：乾淨測試集的 top-1 錯誤率（百分比，完整精度）
- CorruptionErrorMatrix：每個 (kind, severity) 格子的錯誤率
- corruption_error_matrix：由損壞測試集與每格預測組成矩陣
- mce：平均損壞錯誤率（未加權平均；可選以基準模型正規化）
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import pandas as pd

from corruptions.builder import CorruptedTree
from corruptions.kinds import ALL_KINDS, CorruptionCategory, CorruptionError, CorruptionKind, validate_severity
from dataset.manifest import DatasetManifest
from evaluation.predictions import EvaluationError, PredictionSet, load_predictions
from utils.file_ops import atomic_write_text


logger = logging.getLogger(__name__)

Cell = Tuple[CorruptionKind, int]

MATRIX_COLUMNS = ["kind", "severity", "error"]


def clean_error(manifest: DatasetManifest, preds: PredictionSet) -> float:
    """
    計算 top-1 錯誤率（百分比）

    Args:
        manifest: 測試清單
        preds: 恰好涵蓋清單的預測

    Returns:
        100 × 錯誤數 / N，不做四捨五入

    Raises:
        EvaluationError: 覆蓋範圍不符或清單為空
    """
    preds.check_coverage(manifest)
    if len(manifest) == 0:
        raise EvaluationError(f"清單 {manifest.name} 沒有項目，錯誤率未定義", field="items", value=0)
    wrong = sum(1 for item in manifest.items if preds.records[item.id].pred != item.label)
    return 100.0 * wrong / len(manifest)


@dataclass(frozen=True)
class CorruptionErrorMatrix:
    """
    損壞錯誤矩陣

    對宣告的 kinds × severities 必須完整，每格為 [0,100] 的百分比。
    """
    errors: Mapping[Cell, float]
    kinds: Tuple[CorruptionKind, ...]
    severities: Tuple[int, ...] = (1, 2, 3, 4, 5)

    def __post_init__(self):
        kinds = tuple(CorruptionKind.parse(kind) for kind in self.kinds)
        severities = tuple(validate_severity(s) for s in self.severities)
        if not kinds or not severities:
            raise EvaluationError("錯誤矩陣至少需要一種損壞與一個嚴重度", field="kinds", value=list(kinds))
        if len(set(kinds)) != len(kinds) or len(set(severities)) != len(severities):
            raise EvaluationError("錯誤矩陣的損壞類型或嚴重度重複", field="kinds")

        errors: Dict[Cell, float] = {}
        for (kind, severity), value in self.errors.items():
            errors[(CorruptionKind.parse(kind), int(severity))] = float(value)
        expected = {(kind, severity) for kind in kinds for severity in severities}
        missing = sorted(expected - set(errors), key=_cell_order)
        extra = sorted(set(errors) - expected, key=_cell_order)
        if missing:
            raise EvaluationError(f"錯誤矩陣缺少格子: {_cell_name(missing[0])}（共 {len(missing)} 格）",
                                  field="cell", value=[_cell_name(cell) for cell in missing])
        if extra:
            raise EvaluationError(f"錯誤矩陣有未宣告的格子: {_cell_name(extra[0])}",
                                  field="cell", value=[_cell_name(cell) for cell in extra])
        for cell, value in errors.items():
            if not 0.0 <= value <= 100.0:
                raise EvaluationError(f"格子 {_cell_name(cell)} 的錯誤率超出 [0,100]: {value}",
                                      field="error", value=value)

        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "severities", severities)
        object.__setattr__(self, "errors", errors)

    def error(self, kind: Union[str, CorruptionKind], severity: int) -> float:
        return self.errors[(CorruptionKind.parse(kind), severity)]

    def row(self, kind: Union[str, CorruptionKind]) -> List[float]:
        kind = CorruptionKind.parse(kind)
        return [self.errors[(kind, severity)] for severity in self.severities]

    def values(self) -> List[float]:
        return [self.errors[(kind, severity)] for kind in self.kinds for severity in self.severities]

    def same_grid(self, other: "CorruptionErrorMatrix") -> bool:
        return set(self.kinds) == set(other.kinds) and set(self.severities) == set(other.severities)

    def kind_means(self) -> Dict[str, float]:
        """每種損壞在各嚴重度上的平均錯誤率"""
        return {kind.value: math.fsum(self.row(kind)) / len(self.severities) for kind in self.kinds}

    def category_means(self) -> Dict[str, float]:
        """每個分類（noise / blur / weather / digital）的平均錯誤率；沒有損壞的分類不列出"""
        means = {}
        for category in CorruptionCategory:
            values = [value for kind in self.kinds if kind.category is category for value in self.row(kind)]
            if values:
                means[category.value] = math.fsum(values) / len(values)
        return means

    def to_dict(self) -> dict:
        return {
            "kinds": [kind.value for kind in self.kinds],
            "severities": list(self.severities),
            "errors": {kind.value: self.row(kind) for kind in self.kinds},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorruptionErrorMatrix":
        try:
            kinds = [CorruptionKind.parse(kind) for kind in data["kinds"]]
            severities = [int(s) for s in data["severities"]]
            errors = {}
            for kind in kinds:
                row = data["errors"][kind.value]
                if len(row) != len(severities):
                    raise EvaluationError(f"{kind.value} 的錯誤率數量與嚴重度不符", field="errors",
                                          value=kind.value)
                for severity, value in zip(severities, row):
                    errors[(kind, severity)] = float(value)
        except (KeyError, TypeError, ValueError) as e:
            raise EvaluationError(f"錯誤矩陣格式錯誤: {e}", field="matrix")
        return cls(errors, tuple(kinds), tuple(severities))


def _cell_order(cell: Cell):
    return ALL_KINDS.index(cell[0]), cell[1]


def _cell_name(cell: Cell) -> str:
    return f"{cell[0].value}/{cell[1]}"


def corruption_error_matrix(tree: CorruptedTree, preds_per_cell: Mapping[Cell, PredictionSet],
                            threads: int = 1) -> CorruptionErrorMatrix:
    """
    計算損壞測試集每一格的錯誤率

    Args:
        tree: 損壞測試集描述
        preds_per_cell: (kind, severity) → 該格的預測
        threads: 平行計算的執行緒數（合併結果與完成順序無關）

    Returns:
        對 tree 的 kinds × severities 完整的 CorruptionErrorMatrix

    Raises:
        EvaluationError: 缺少格子的預測，或格子內覆蓋範圍不符
    """
    preds = {(CorruptionKind.parse(kind), int(severity)): value
             for (kind, severity), value in preds_per_cell.items()}
    cells = tree.cells()
    for cell in cells:
        if cell not in preds:
            raise EvaluationError(f"缺少格子 {_cell_name(cell)} 的預測", field="cell", value=_cell_name(cell))
    unexpected = sorted(set(preds) - set(cells), key=_cell_order)
    if unexpected:
        raise EvaluationError(f"預測含有損壞測試集沒有的格子: {_cell_name(unexpected[0])}",
                              field="cell", value=_cell_name(unexpected[0]))

    def evaluate(cell: Cell) -> Tuple[Cell, float]:
        try:
            return cell, clean_error(tree.load_cell(*cell), preds[cell])
        except EvaluationError as e:
            raise EvaluationError(f"格子 {_cell_name(cell)}: {e}", field=e.field, value=e.value)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        errors = dict(pool.map(evaluate, cells))

    logger.info(f"錯誤矩陣完成: {len(tree.kinds)} 種損壞 × {len(tree.severities)} 級")
    return CorruptionErrorMatrix(errors, tree.kinds, tree.severities)


def mce(matrix: CorruptionErrorMatrix,
        baseline: Optional[CorruptionErrorMatrix] = None) -> Tuple[float, Optional[float]]:
    """
    平均損壞錯誤率

    Args:
        matrix: 錯誤矩陣
        baseline: 正規化用的基準矩陣（需相同格子）

    Returns:
        (未加權平均 mCE 百分比, 正規化比值或 None)；
        正規化比值 = 各損壞 Σ_s E / Σ_s E_base 的平均

    Raises:
        EvaluationError: 格子不一致或基準某列總和為零
    """
    values = matrix.values()
    plain = math.fsum(values) / len(values)
    if baseline is None:
        return plain, None

    if not matrix.same_grid(baseline):
        raise EvaluationError("基準矩陣的損壞類型或嚴重度與評估矩陣不同", field="baseline",
                              value=[kind.value for kind in baseline.kinds])
    ratios = []
    for kind in matrix.kinds:
        denominator = math.fsum(baseline.error(kind, s) for s in matrix.severities)
        if denominator == 0.0:
            raise EvaluationError(f"基準矩陣 {kind.value} 的錯誤率總和為零，無法正規化",
                                  field="baseline", value=kind.value)
        ratios.append(math.fsum(matrix.error(kind, s) for s in matrix.severities) / denominator)
    return plain, math.fsum(ratios) / len(ratios)


def load_tree_predictions(directory: Union[str, Path], tree: CorruptedTree,
                          model_id: Optional[str] = None) -> Dict[Cell, PredictionSet]:
    """
    讀取損壞測試集的預測目錄：<directory>/<kind>/<severity>.csv

    缺少的檔案不列入結果，交由 corruption_error_matrix 報告缺少的格子。
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"預測目錄不存在: {directory}")
    model_id = model_id or directory.name
    preds = {}
    for kind, severity in tree.cells():
        path = directory / kind.value / f"{severity}.csv"
        if path.is_file():
            preds[(kind, severity)] = load_predictions(path, model_id=model_id,
                                                       dataset_id=f"{kind.value}/{severity}")
    return preds


def write_matrix_csv(matrix: CorruptionErrorMatrix, path: Union[str, Path]) -> Path:
    """以 kind,severity,error 長格式原子寫入錯誤矩陣（完整精度）"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(MATRIX_COLUMNS)
    for kind in matrix.kinds:
        for severity in matrix.severities:
            writer.writerow([kind.value, severity, repr(matrix.error(kind, severity))])
    return atomic_write_text(path, buffer.getvalue())


def load_matrix_csv(path: Union[str, Path]) -> CorruptionErrorMatrix:
    """
    讀取 kind,severity,error 長格式的錯誤矩陣

    宣告的嚴重度為檔案中出現的嚴重度，矩陣必須對其完整。
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"錯誤矩陣檔不存在: {path}")
    try:
        frame = pd.read_csv(path, dtype={"kind": str}, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise EvaluationError(f"錯誤矩陣檔格式錯誤: {path} ({e})", field="matrix", value=str(path))
    frame.columns = [str(column).strip() for column in frame.columns]
    missing = [column for column in MATRIX_COLUMNS if column not in frame.columns]
    if missing:
        raise EvaluationError(f"錯誤矩陣檔 {path} 缺少欄位: {', '.join(missing)}",
                              field="matrix", value=missing)
    if frame.empty:
        raise EvaluationError(f"錯誤矩陣檔 {path} 沒有資料列", field="matrix", value=str(path))

    severities_raw = pd.to_numeric(frame["severity"], errors="coerce")
    errors_raw = pd.to_numeric(frame["error"], errors="coerce")
    if severities_raw.isna().any() or (severities_raw % 1 != 0).any():
        raise EvaluationError(f"錯誤矩陣檔 {path} 的 severity 欄必須是整數", field="severity")
    if errors_raw.isna().any():
        raise EvaluationError(f"錯誤矩陣檔 {path} 的 error 欄必須是數值", field="error")

    try:
        kinds: List[CorruptionKind] = []
        errors: Dict[Cell, float] = {}
        for name, severity, value in zip(frame["kind"], severities_raw, errors_raw):
            kind = CorruptionKind.parse(name)
            cell = (kind, int(severity))
            if cell in errors:
                raise EvaluationError(f"錯誤矩陣檔 {path} 有重複的格子 {_cell_name(cell)}",
                                      field="cell", value=_cell_name(cell))
            if kind not in kinds:
                kinds.append(kind)
            errors[cell] = float(value)
    except CorruptionError as e:
        raise EvaluationError(f"錯誤矩陣檔 {path}: {e}", field=e.field, value=e.value)
    severities = tuple(sorted({severity for _, severity in errors}))
    return CorruptionErrorMatrix(errors, tuple(kinds), severities)

