"""
影像匯入模組

- ingest_generated：將外部生成的影像匯入為 source=generated 的清單，
  並檢查每個類別鍵都存在於下游標籤空間
- manifest_from_class_tree：由 <root>/<class_key>/<影像> 目錄結構建立來源清單
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path, PurePosixPath
from typing import Dict, List, Optional, Sequence, Tuple, Union

from dataset.image_io import ImageGeometry, decode_image, is_image_file, header_geometry
from dataset.manifest import (
    ClassDescriptor, DatasetManifest, ItemRecord, ItemSource, ManifestError, is_contained_path,
    validate_label_space
)
from utils.validators import require_directory, require_file


logger = logging.getLogger(__name__)


def item_id_for(relative_path: str) -> str:
    """由相對路徑產生項目 ID：去掉副檔名並將 "/" 換成 "-" """
    path = PurePosixPath(relative_path)
    return str(path.with_suffix("")).replace("/", "-")


def read_label_map(path: Union[str, Path]) -> List[Tuple[str, str]]:
    """
    讀取標籤對照檔（每行 `相對路徑<TAB>類別鍵`）

    Returns:
        (相對路徑, 類別鍵) 列表，依檔案順序
    """
    source = require_file(path, field="label_map")
    entries: List[Tuple[str, str]] = []
    with open(source, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            relative, sep, key = line.partition("\t")
            if not sep or not relative.strip() or not key.strip():
                raise ManifestError(f"標籤對照檔第 {line_number} 行格式錯誤: {line!r}",
                                    field="label_map", value=line_number)
            if not is_contained_path(relative.strip()):
                raise ManifestError(
                    f"標籤對照檔第 {line_number} 行的路徑必須在影像目錄之內: {relative.strip()!r}",
                    field="label_map", value=line_number)
            entries.append((PurePosixPath(relative.strip()).as_posix(), key.strip()))
    return entries


def _scan_class_dirs(root: Path) -> List[Tuple[str, str]]:
    """掃描 <root>/<class_key>/... 下的影像，回傳排序後的 (相對路徑, 類別鍵)"""
    entries: List[Tuple[str, str]] = []
    stray = []
    for child in sorted(root.iterdir()):
        if child.is_dir():
            for file_path in sorted(child.rglob("*")):
                if is_image_file(file_path):
                    entries.append((file_path.relative_to(root).as_posix(), child.name))
        elif is_image_file(child):
            stray.append(child.name)
    if stray:
        raise ManifestError(f"有 {len(stray)} 張影像不在任何類別子目錄中，例如 {stray[0]}",
                            field="labeling", value=stray[0])
    return entries


def _scan_images(root: Path) -> List[str]:
    return [p.relative_to(root).as_posix() for p in sorted(root.rglob("*")) if is_image_file(p)]


def _common_geometry(root: Path, relative_paths: Sequence[str], threads: int,
                     decode: bool) -> Optional[ImageGeometry]:
    """所有影像幾何一致時回傳該幾何，否則回傳 None；decode=True 時完整解碼以確認可讀"""
    if not relative_paths:
        return None

    def geometry_of(relative: str) -> ImageGeometry:
        path = root / relative
        return decode_image(path).geometry if decode else header_geometry(path)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        geometries = set(pool.map(geometry_of, relative_paths))
    if len(geometries) == 1:
        return geometries.pop()
    logger.warning(f"{root} 下的影像幾何不一致（{len(geometries)} 種），清單不記錄 geometry")
    return None


def _build_items(entries: Sequence[Tuple[str, str]], label_space: Sequence[ClassDescriptor],
                 source: ItemSource, provenance: Optional[str]) -> List[ItemRecord]:
    index_of: Dict[str, int] = {descriptor.key: descriptor.index for descriptor in label_space}
    unknown = sorted({key for _, key in entries if key not in index_of})
    if unknown:
        shown = ", ".join(unknown[:20]) + (" ..." if len(unknown) > 20 else "")
        raise ManifestError(f"類別鍵不在目標標籤空間中（共 {len(unknown)} 個）: {shown}",
                            field="label", value=unknown)
    return [ItemRecord(id=item_id_for(relative), path=relative, label=index_of[key],
                       source=source, provenance=provenance)
            for relative, key in entries]


def report_class_counts(manifest: DatasetManifest) -> Dict[str, int]:
    """回傳並記錄每個類別鍵的項目數"""
    counts = {manifest.key_of(label): count for label, count in enumerate(manifest.class_counts())}
    nonzero = [count for count in counts.values() if count]
    if nonzero:
        logger.info(f"{manifest.name}: {len(nonzero)}/{manifest.num_classes} 個類別有資料，"
                    f"每類 min={min(nonzero)} max={max(nonzero)}")
    return counts


def ingest_generated(image_dir: Union[str, Path],
                     target_label_space: Sequence[ClassDescriptor],
                     label_map: Optional[Union[str, Path]] = None,
                     name: Optional[str] = None,
                     provenance: Optional[str] = None,
                     threads: int = 1) -> DatasetManifest:
    """
    匯入生成影像

    標籤來源為標籤對照檔，或（未提供時）每個類別一個子目錄的結構。
    任何類別鍵不在目標標籤空間中即拒絕整批匯入。

    Args:
        image_dir: 生成影像目錄
        target_label_space: 下游任務的標籤空間
        label_map: 標籤對照檔（可選）
        name: 清單名稱（預設為目錄名稱）
        provenance: 寫入每個項目的來源說明（如生成器名稱）
        threads: 解碼執行緒數

    Returns:
        所有項目 source=generated 的清單

    Raises:
        ManifestError: 類別鍵不在標籤空間、影像未被指派標籤
        ImageDecodeError: 影像無法解碼
    """
    root = require_directory(image_dir, field="image_dir").resolve()
    label_space = list(target_label_space)
    validate_label_space(label_space)

    if label_map is not None:
        entries = read_label_map(label_map)
        missing = [relative for relative, _ in entries if not (root / relative).is_file()]
        if missing:
            raise ManifestError(f"標籤對照檔中有 {len(missing)} 個路徑不存在，例如 {missing[0]}",
                                field="label_map", value=missing[0])
        mapped = {relative for relative, _ in entries}
        unlabeled = [relative for relative in _scan_images(root) if relative not in mapped]
        if unlabeled:
            raise ManifestError(f"有 {len(unlabeled)} 張影像未在標籤對照檔中指派類別，例如 {unlabeled[0]}",
                                field="labeling", value=unlabeled[0])
    else:
        entries = _scan_class_dirs(root)

    items = _build_items(entries, label_space, ItemSource.GENERATED, provenance)
    if not items:
        logger.warning(f"{root} 中沒有任何生成影像，產生空清單（N_gen=0）")

    geometry = _common_geometry(root, [item.path for item in items], threads, decode=True)
    manifest = DatasetManifest(name=name or root.name, root=root, label_space=label_space,
                               items=items, geometry=geometry)
    report_class_counts(manifest)
    logger.info(f"匯入生成影像: N_gen={manifest.n_gen}, geometry={geometry}")
    return manifest


def manifest_from_class_tree(root_dir: Union[str, Path],
                             label_space: Optional[Sequence[ClassDescriptor]] = None,
                             name: Optional[str] = None,
                             source: ItemSource = ItemSource.REAL,
                             provenance: Optional[str] = None,
                             threads: int = 1) -> DatasetManifest:
    """
    由類別子目錄結構建立清單

    Args:
        root_dir: 來源根目錄（<root>/<class_key>/<影像>）
        label_space: 標籤空間；未提供時以排序後的子目錄名稱建立
        name: 清單名稱（預設為目錄名稱）
        source: 項目來源標記
        provenance: 來源說明（如 ImageNetV2 的變體名稱）
        threads: 讀取檔頭的執行緒數

    Returns:
        DatasetManifest（影像尺寸不一致時 geometry 為 None）
    """
    root = require_directory(root_dir, field="source").resolve()
    entries = _scan_class_dirs(root)

    if label_space is None:
        keys = sorted({key for _, key in entries})
        label_space = [ClassDescriptor(index=i, key=key, display_name=key)
                       for i, key in enumerate(keys)]
    label_space = list(label_space)
    validate_label_space(label_space)

    items = _build_items(entries, label_space, source, provenance)
    if not items:
        logger.warning(f"{root} 中沒有任何影像")
    geometry = _common_geometry(root, [item.path for item in items], threads, decode=False)
    manifest = DatasetManifest(name=name or root.name, root=root, label_space=label_space,
                               items=items, geometry=geometry)
    counts = Counter(item.label for item in items)
    logger.info(f"由類別目錄建立清單 {manifest.name}: N={len(manifest)}, 類別數={len(counts)}")
    return manifest
