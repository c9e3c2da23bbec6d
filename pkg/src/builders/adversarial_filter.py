"""
誤分類篩選測試集建構模組（-A 變體）

只保留參考模型預測錯誤的驗證集影像。模型不在此執行，
由外部提供的預測檔決定篩選結果；影像位元組原樣複製。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path, PurePosixPath
from typing import Optional, Union

from dataset.manifest import DatasetManifest, ItemRecord, write_manifest
from evaluation.predictions import PredictionSet
from builders.intersection import MANIFEST_FILE
from utils.file_ops import atomic_write_bytes


logger = logging.getLogger(__name__)


def build_adversarial_filter_testset(val: DatasetManifest, preds: PredictionSet,
                                     out: Union[str, Path], threads: int = 1,
                                     name: Optional[str] = None) -> DatasetManifest:
    """
    建立誤分類篩選測試集

    Args:
        val: 驗證集清單
        preds: 恰好涵蓋 val 每個項目的預測
        out: 輸出目錄（影像保留原相對路徑）
        threads: 複製執行緒數
        name: 輸出清單名稱（預設 "<val>-A"）

    Returns:
        只含誤分類項目的 DatasetManifest（標籤空間不變，依 val 順序）

    Raises:
        EvaluationError: 預測缺少或多出項目、類別超出範圍
    """
    wrong_ids = set(preds.misclassified(val))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    selected = [item for item in val.items if item.id in wrong_ids]
    if not selected:
        logger.warning(f"預測 {preds.model_id} 在 {val.name} 上沒有誤分類項目，輸出空清單")

    def copy(item: ItemRecord) -> ItemRecord:
        relative = PurePosixPath(item.path).as_posix()
        atomic_write_bytes(out / relative, val.resolve(item).read_bytes())
        return item

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        items = list(pool.map(copy, selected))

    manifest = val.with_items(items, name=name or f"{val.name}-A", root=out.resolve())
    write_manifest(manifest, out / MANIFEST_FILE)

    counts = [count for count in manifest.class_counts() if count > 0]
    logger.info(f"誤分類測試集: {len(manifest)} / {len(val)} 項，{len(counts)} 類有影像"
                + (f"（每類最少 {min(counts)}，最多 {max(counts)}）" if counts else ""))
    return manifest
