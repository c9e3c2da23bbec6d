"""
類別交集測試集建構模組

將大型偏移資料集（如 ImageNetV2、ImageNet-R）限制在與目標標籤空間共有的類別，
重新標記為目標索引並重取樣到目標解析度（-V2 / -R 變體）。
類別一律以穩定的鍵（WNID 等）比對，不使用顯示名稱或索引。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

from dataset.image_io import ImageGeometry, decode_image, encode_png, resample
from dataset.manifest import (ClassDescriptor, DatasetManifest, ItemRecord, ItemSource, same_label_space,
                              validate_label_space, write_manifest)
from utils.file_ops import atomic_write_bytes
from utils.validators import ValidationError


MANIFEST_FILE = "manifest.json"

_UNSAFE_ID_CHARS = ("/", "\\", "\0")


class TestsetBuildError(ValidationError):
    """偏移測試集建構的前置條件失敗"""
    __test__ = False


@dataclass(frozen=True)
class ClassIntersection:
    """來源與目標標籤空間的類別交集：來源鍵 → 目標索引"""
    source_space: Tuple[ClassDescriptor, ...]
    target_space: Tuple[ClassDescriptor, ...]
    mapping: Tuple[Tuple[str, int], ...]

    def __len__(self) -> int:
        return len(self.mapping)

    def as_dict(self) -> Dict[str, int]:
        return dict(self.mapping)

    def source_index_map(self) -> Dict[int, int]:
        """來源索引 → 目標索引"""
        by_key = self.as_dict()
        return {cls.index: by_key[cls.key] for cls in self.source_space if cls.key in by_key}

    def to_dict(self) -> dict:
        target_keys = [cls.key for cls in self.target_space]
        return {
            "source_classes": len(self.source_space),
            "target_classes": len(self.target_space),
            "mapping": [{"key": key, "target_index": index, "target_key": target_keys[index]}
                        for key, index in self.mapping],
        }


def intersect_classes(source_space: Sequence[ClassDescriptor],
                      target_space: Sequence[ClassDescriptor]) -> ClassIntersection:
    """
    計算兩個標籤空間的類別交集

    mapping 依來源索引排序；空交集是合法結果但會發出警告。

    Args:
        source_space: 大型資料集的標籤空間
        target_space: 目標（小型）資料集的標籤空間

    Returns:
        ClassIntersection
    """
    logger = logging.getLogger(f"{__name__}.intersect_classes")
    validate_label_space(source_space)
    validate_label_space(target_space)

    target_by_key = {cls.key: cls.index for cls in target_space}
    mapping = tuple((cls.key, target_by_key[cls.key])
                    for cls in sorted(source_space, key=lambda c: c.index)
                    if cls.key in target_by_key)
    if not mapping:
        logger.warning(f"來源 {len(source_space)} 類與目標 {len(target_space)} 類沒有共同的類別鍵")
    else:
        logger.info(f"類別交集: {len(mapping)} 類（來源 {len(source_space)}，目標 {len(target_space)}）")
    return ClassIntersection(tuple(source_space), tuple(target_space), mapping)


def _check_item_id(item_id: str):
    if any(ch in item_id for ch in _UNSAFE_ID_CHARS) or item_id in (".", ".."):
        raise TestsetBuildError(f"項目 ID 不能作為檔名: {item_id!r}", field="items.id", value=item_id)


def build_intersection_testset(source: DatasetManifest, intersection: ClassIntersection,
                               target_geometry: ImageGeometry, out: Union[str, Path],
                               threads: int = 1, name: Optional[str] = None) -> DatasetManifest:
    """
    建立類別交集測試集

    輸出 <out>/<target_key>/<item-id>.png 與 <out>/manifest.json；
    項目依來源順序排列，provenance 記錄來源清單名稱。

    Args:
        source: 以 source_space 標記的來源清單
        intersection: intersect_classes 的結果
        target_geometry: 目標幾何（寬、高、通道）
        out: 輸出目錄
        threads: 重取樣執行緒數
        name: 輸出清單名稱（預設 "<source>-<目標類別數>"）

    Returns:
        以完整目標標籤空間標記的 DatasetManifest
    """
    logger = logging.getLogger(f"{__name__}.build_intersection_testset")
    if not same_label_space(source.label_space, intersection.source_space):
        raise TestsetBuildError(f"來源清單 {source.name} 的標籤空間與交集的來源空間不同",
                                field="label_space")

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    index_map = intersection.source_index_map()
    target_keys = [cls.key for cls in intersection.target_space]
    if not intersection.mapping:
        logger.warning("類別交集為空，輸出空清單")

    selected = [item for item in source.items if item.label in index_map]
    for item in selected:
        _check_item_id(item.id)

    def convert(item: ItemRecord) -> ItemRecord:
        target_label = index_map.get(item.label)
        assert target_label is not None, f"未對應的標籤: {item.label}"
        key = target_keys[target_label]
        image = resample(decode_image(source.resolve(item)), target_geometry)
        relative = f"{key}/{item.id}.png"
        atomic_write_bytes(out / relative, encode_png(image))
        return ItemRecord(id=item.id, path=relative, label=target_label,
                          source=ItemSource.REAL, provenance=source.name)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        items = list(pool.map(convert, selected))

    manifest = DatasetManifest(name=name or f"{source.name}-{len(intersection.target_space)}",
                               root=out.resolve(), label_space=intersection.target_space,
                               items=items, geometry=target_geometry)
    write_manifest(manifest, out / MANIFEST_FILE)

    counts = manifest.class_counts()
    present = [count for count in counts if count > 0]
    logger.info(f"交集測試集: {len(manifest)} 項，{len(present)} 類有影像"
                + (f"（每類最少 {min(present)}，最多 {max(present)}）" if present else ""))
    return manifest
