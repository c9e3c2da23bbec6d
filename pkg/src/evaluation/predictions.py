"""
預測檔模組

PredictionSet：以項目 ID 為鍵的模型預測（預測類別、可選信心值、可選真實標籤）。

支援兩種 CSV 格式：
- 硬標籤：item_id,label,pred（可另有 confidence 欄）
- logits：item_id,v0,v1,...（argmax 取最小索引，信心值為 softmax 最大機率）
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Union

import numpy as np
import pandas as pd

from dataset.manifest import DatasetManifest
from utils.validators import ValidationError


logger = logging.getLogger(__name__)

HARD_COLUMNS = ["item_id", "label", "pred"]


class EvaluationError(ValidationError):
    """評估輸入不一致（覆蓋範圍、格子缺漏、格式錯誤等）"""
    pass


@dataclass(frozen=True)
class PredictionRecord:
    """單一項目的預測"""
    pred: int
    confidence: Optional[float] = None
    label: Optional[int] = None


@dataclass
class PredictionSet:
    """模型在某個資料集上的預測"""
    model_id: str
    dataset_id: str
    records: Dict[str, PredictionRecord]

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.records

    def __iter__(self) -> Iterator[str]:
        return iter(self.records)

    def get(self, item_id: str) -> Optional[PredictionRecord]:
        return self.records.get(item_id)

    def item_ids(self) -> List[str]:
        return list(self.records)

    def check_coverage(self, manifest: DatasetManifest) -> None:
        """
        檢查預測恰好涵蓋清單中的每個項目，且預測類別在標籤空間內

        預測檔帶有 label 欄時，也檢查其與清單一致。

        Raises:
            EvaluationError: 缺少、多出的項目 ID，或類別超出範圍
        """
        expected = set(manifest.item_ids())
        present = set(self.records)
        missing = sorted(expected - present)
        extra = sorted(present - expected)
        if missing:
            raise EvaluationError(
                f"預測 {self.model_id} 缺少 {len(missing)} 個項目（例如 {missing[0]}），清單 {manifest.name}",
                field="item_id", value=missing)
        if extra:
            raise EvaluationError(
                f"預測 {self.model_id} 多出 {len(extra)} 個不在清單 {manifest.name} 的項目（例如 {extra[0]}）",
                field="item_id", value=extra)

        num_classes = manifest.num_classes
        for item in manifest.items:
            record = self.records[item.id]
            if not 0 <= record.pred < num_classes:
                raise EvaluationError(f"項目 {item.id} 的預測類別超出範圍: {record.pred}（K={num_classes}）",
                                      field="pred", value=record.pred)
            if record.label is not None and record.label != item.label:
                raise EvaluationError(
                    f"項目 {item.id} 的預測檔標籤 {record.label} 與清單標籤 {item.label} 不一致",
                    field="label", value=item.id)

    def misclassified(self, manifest: DatasetManifest) -> List[str]:
        """預測類別與清單標籤不同的項目 ID（依清單順序）"""
        self.check_coverage(manifest)
        return [item.id for item in manifest.items if self.records[item.id].pred != item.label]


def _duplicates(ids: pd.Series) -> List[str]:
    return sorted(set(ids[ids.duplicated()].tolist()))


def _integer_column(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce")
    if values.isna().any() or (values % 1 != 0).any():
        row = int(values.isna().idxmax()) if values.isna().any() else int((values % 1 != 0).idxmax())
        raise EvaluationError(f"預測檔 {path} 的 {column} 欄第 {row + 2} 行不是整數",
                              field=column, value=frame[column].iloc[row])
    return values.astype(np.int64).to_numpy()


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


def predictions_from_logits(item_ids: List[str], logits: np.ndarray,
                            model_id: str = "", dataset_id: str = "") -> PredictionSet:
    """由 logits 矩陣建立預測（argmax 取最小索引）"""
    logits = np.asarray(logits, dtype=np.float64)
    preds = np.argmax(logits, axis=1)
    confidence = softmax(logits).max(axis=1)
    records = {item_id: PredictionRecord(int(pred), float(conf))
               for item_id, pred, conf in zip(item_ids, preds, confidence)}
    return PredictionSet(model_id, dataset_id, records)


def load_predictions(path: Union[str, Path], model_id: Optional[str] = None,
                     dataset_id: str = "") -> PredictionSet:
    """
    讀取預測檔（硬標籤或 logits 格式）

    Args:
        path: CSV 檔路徑
        model_id: 模型識別（預設為檔名）
        dataset_id: 資料集識別

    Returns:
        PredictionSet

    Raises:
        FileNotFoundError: 檔案不存在
        EvaluationError: 格式錯誤或項目 ID 重複
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"預測檔不存在: {path}")
    model_id = model_id or path.stem

    try:
        frame = pd.read_csv(path, dtype={"item_id": str}, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise EvaluationError(f"預測檔格式錯誤: {path} ({e})", field="predictions", value=str(path))

    frame.columns = [str(column).strip() for column in frame.columns]
    if "item_id" not in frame.columns:
        raise EvaluationError(f"預測檔 {path} 缺少 item_id 欄", field="item_id", value=str(path))

    duplicates = _duplicates(frame["item_id"])
    if duplicates:
        raise EvaluationError(f"預測檔 {path} 有重複的項目 ID: {', '.join(duplicates[:5])}",
                              field="item_id", value=duplicates)
    item_ids = frame["item_id"].tolist()

    if "pred" in frame.columns:
        preds = _integer_column(frame, "pred", path)
        labels = _integer_column(frame, "label", path) if "label" in frame.columns else None
        confidence = None
        if "confidence" in frame.columns:
            confidence = pd.to_numeric(frame["confidence"], errors="coerce").to_numpy()
            if np.isnan(confidence).any() or (confidence < 0).any() or (confidence > 1).any():
                raise EvaluationError(f"預測檔 {path} 的 confidence 必須位於 [0,1]", field="confidence")
        records = {}
        for position, item_id in enumerate(item_ids):
            records[item_id] = PredictionRecord(
                pred=int(preds[position]),
                confidence=float(confidence[position]) if confidence is not None else None,
                label=int(labels[position]) if labels is not None else None)
        logger.debug(f"讀取硬標籤預測 {path}: {len(records)} 筆")
        return PredictionSet(model_id, dataset_id, records)

    logit_columns = [column for column in frame.columns if column != "item_id"]
    if not logit_columns:
        raise EvaluationError(f"預測檔 {path} 需要 {','.join(HARD_COLUMNS)} 欄或 logits 欄",
                              field="predictions", value=str(path))
    logits = frame[logit_columns].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    if not np.isfinite(logits).all():
        raise EvaluationError(f"預測檔 {path} 的 logits 含非數值", field="logits", value=str(path))
    logger.debug(f"讀取 logits 預測 {path}: {len(item_ids)} 筆 × {len(logit_columns)} 類")
    return predictions_from_logits(item_ids, logits, model_id, dataset_id)
