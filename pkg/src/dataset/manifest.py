"""
資料集清單（manifest）模組

定義資料集清單的資料模型與檔案格式：
- ClassDescriptor：標籤空間中的一個類別（索引、穩定鍵、顯示名稱）
- ItemRecord：一筆影像項目（ID、相對路徑、標籤、來源、來源說明）
- DatasetManifest：一個資料集切分的完整目錄（真實／生成資料皆在此）
- load_manifest / write_manifest：JSON 檔案讀寫，保留項目順序
- load_label_space：由清單檔或類別列表檔載入標籤空間
"""

import os
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from dataset.image_io import ImageGeometry, ImageDecodeError, decode_image
from utils.file_ops import atomic_write_json
from utils.validators import ValidationError, ValidationResult, missing_fields


logger = logging.getLogger(__name__)

MANIFEST_FIELDS = ["name", "root", "geometry", "label_space", "items"]
CLASS_FIELDS = ["index", "key", "display_name"]
ITEM_FIELDS = ["id", "path", "label", "source"]


class ManifestError(ValidationError):
    """資料集清單格式或不變量錯誤"""
    pass


class ItemSource(str, Enum):
    """項目來源"""
    REAL = "real"
    GENERATED = "generated"


@dataclass(frozen=True)
class ClassDescriptor:
    """標籤空間中的類別"""
    index: int
    key: str
    display_name: str

    def to_dict(self) -> dict:
        return {"index": self.index, "key": self.key, "display_name": self.display_name}


@dataclass(frozen=True)
class ItemRecord:
    """資料集中的一筆影像"""
    id: str
    path: str
    label: int
    source: ItemSource = ItemSource.REAL
    provenance: Optional[str] = None

    def to_dict(self) -> dict:
        data = {"id": self.id, "path": self.path, "label": self.label, "source": self.source.value}
        if self.provenance is not None:
            data["provenance"] = self.provenance
        return data


def is_contained_path(path: str) -> bool:
    """相對路徑且不含 ".." 部件（解析後一定落在根目錄之內）"""
    if not path or PurePosixPath(path).is_absolute() or Path(path).is_absolute():
        return False
    return ".." not in PurePosixPath(path.replace("\\", "/")).parts


def validate_label_space(label_space: Sequence[ClassDescriptor]) -> None:
    """
    檢查標籤空間：索引為 0..K-1 連續且不重複，鍵不重複

    Raises:
        ManifestError: 不變量違反
    """
    seen_keys = set()
    for position, descriptor in enumerate(label_space):
        if descriptor.index != position:
            raise ManifestError(
                f"標籤空間索引必須為連續的 0..K-1，位置 {position} 的索引為 {descriptor.index}",
                field="label_space.index", value=descriptor.index)
        if not descriptor.key:
            raise ManifestError(f"類別 {position} 缺少 key", field="label_space.key", value=descriptor.key)
        if descriptor.key in seen_keys:
            raise ManifestError(f"標籤空間中的鍵重複: {descriptor.key}",
                                field="label_space.key", value=descriptor.key)
        seen_keys.add(descriptor.key)


@dataclass(frozen=True)
class DatasetManifest:
    """
    一個資料集切分的目錄

    建立時即檢查結構不變量（標籤空間、ID 唯一、標籤範圍、相對路徑）；
    影像可解碼與幾何一致的檢查由 validate_images() 負責。
    """
    name: str
    root: Path
    label_space: Tuple[ClassDescriptor, ...]
    items: Tuple[ItemRecord, ...]
    geometry: Optional[ImageGeometry] = None
    _index: Dict[str, int] = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))
        object.__setattr__(self, "label_space", tuple(self.label_space))
        object.__setattr__(self, "items", tuple(self.items))
        validate_label_space(self.label_space)

        num_classes = len(self.label_space)
        index: Dict[str, int] = {}
        for position, item in enumerate(self.items):
            if item.id in index:
                raise ManifestError(f"重複的項目 ID: {item.id}", field="items.id", value=item.id)
            index[item.id] = position
            if isinstance(item.label, bool) or not isinstance(item.label, int) \
                    or not 0 <= item.label < num_classes:
                raise ManifestError(
                    f"項目 {item.id} 的標籤超出範圍: {item.label}（K={num_classes}）",
                    field="items.label", value=item.label)
            if not isinstance(item.source, ItemSource):
                raise ManifestError(f"項目 {item.id} 的來源無效: {item.source}",
                                    field="items.source", value=item.source)
            if not is_contained_path(item.path):
                raise ManifestError(f"項目 {item.id} 的路徑必須是不含 .. 的相對路徑: {item.path}",
                                    field="items.path", value=item.path)
        object.__setattr__(self, "_index", index)

    # ------------------------------------------------------------------
    # 查詢

    def __len__(self) -> int:
        return len(self.items)

    @property
    def num_classes(self) -> int:
        return len(self.label_space)

    @property
    def n_real(self) -> int:
        return sum(1 for item in self.items if item.source is ItemSource.REAL)

    @property
    def n_gen(self) -> int:
        return sum(1 for item in self.items if item.source is ItemSource.GENERATED)

    def count_by_source(self) -> Dict[ItemSource, int]:
        """依來源統計，N = N_real + N_gen"""
        return {ItemSource.REAL: self.n_real, ItemSource.GENERATED: self.n_gen}

    def class_counts(self) -> List[int]:
        """每個類別的項目數（長度 K，包含零）"""
        counts = [0] * self.num_classes
        for item in self.items:
            counts[item.label] += 1
        return counts

    def label_keys(self) -> List[str]:
        return [descriptor.key for descriptor in self.label_space]

    def key_of(self, label: int) -> str:
        return self.label_space[label].key

    def get(self, item_id: str) -> Optional[ItemRecord]:
        position = self._index.get(item_id)
        return None if position is None else self.items[position]

    def item_ids(self) -> List[str]:
        return [item.id for item in self.items]

    def resolve(self, item: ItemRecord) -> Path:
        """項目影像的絕對路徑"""
        return self.root / Path(PurePosixPath(item.path))

    def with_items(self, items: Iterable[ItemRecord], name: Optional[str] = None,
                   root: Optional[Path] = None,
                   geometry: Optional[ImageGeometry] = None) -> "DatasetManifest":
        """以新的項目列表建立清單（標籤空間不變）"""
        return replace(self, items=tuple(items), name=name or self.name,
                       root=root if root is not None else self.root,
                       geometry=geometry if geometry is not None else self.geometry,
                       _index=None)

    # ------------------------------------------------------------------
    # 影像驗證

    def validate_images(self, threads: int = 1) -> ValidationResult:
        """
        檢查每個項目的影像可解碼，且（若有設定 geometry）幾何一致

        Args:
            threads: 解碼執行緒數

        Returns:
            ValidationResult（欄位鍵為項目 ID）
        """
        result = ValidationResult()

        def check(item: ItemRecord) -> Tuple[str, Optional[str]]:
            path = self.resolve(item)
            try:
                image = decode_image(path)
            except FileNotFoundError:
                return item.id, f"影像路徑無法解析: {path}"
            except ImageDecodeError as e:
                return item.id, str(e)
            if self.geometry is not None and image.geometry != self.geometry:
                return item.id, f"影像幾何 {image.geometry} 與清單 {self.geometry} 不一致: {path}"
            return item.id, None

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            for item_id, message in pool.map(check, self.items):
                if message:
                    result.add_error(item_id, message)
        return result

    # ------------------------------------------------------------------
    # 序列化

    def to_dict(self, relative_to: Optional[Path] = None) -> dict:
        """
        轉為檔案格式字典

        Args:
            relative_to: 清單檔所在目錄；提供時 root 以相對路徑儲存
        """
        if relative_to is not None:
            root_text = Path(os.path.relpath(self.root.resolve(), relative_to)).as_posix()
        else:
            root_text = self.root.as_posix()
        return {
            "name": self.name,
            "root": root_text,
            "geometry": self.geometry.to_dict() if self.geometry else None,
            "label_space": [descriptor.to_dict() for descriptor in self.label_space],
            "items": [item.to_dict() for item in self.items],
        }


def _parse_label_space(raw) -> List[ClassDescriptor]:
    if not isinstance(raw, list):
        raise ManifestError("label_space 必須是列表", field="label_space")
    label_space = []
    for entry in raw:
        absent = missing_fields(entry, CLASS_FIELDS[:2])
        if absent:
            raise ManifestError(f"label_space 項目缺少欄位: {', '.join(absent)}",
                                field=f"label_space.{absent[0]}")
        key = str(entry["key"])
        label_space.append(ClassDescriptor(index=entry["index"], key=key,
                                           display_name=str(entry.get("display_name") or key)))
    return label_space


def _parse_item(entry) -> ItemRecord:
    absent = missing_fields(entry, ITEM_FIELDS)
    if absent:
        raise ManifestError(f"items 項目缺少欄位: {', '.join(absent)}", field=f"items.{absent[0]}")
    try:
        source = ItemSource(entry["source"])
    except ValueError:
        raise ManifestError(f"項目 {entry['id']} 的來源無效: {entry['source']}",
                            field="items.source", value=entry["source"])
    provenance = entry.get("provenance")
    return ItemRecord(id=str(entry["id"]), path=str(entry["path"]), label=entry["label"],
                      source=source, provenance=None if provenance is None else str(provenance))


def manifest_from_dict(data: dict, base_dir: Optional[Path] = None) -> DatasetManifest:
    """
    由字典建立清單

    Args:
        data: 檔案格式字典
        base_dir: 相對 root 的基準目錄（清單檔所在目錄）
    """
    if not isinstance(data, dict):
        raise ManifestError("清單根層級必須是物件", field="manifest")
    absent = missing_fields(data, MANIFEST_FIELDS)
    if absent:
        raise ManifestError(f"清單缺少欄位: {', '.join(absent)}", field=absent[0])
    if not isinstance(data["items"], list):
        raise ManifestError("items 必須是列表", field="items")

    root = Path(str(data["root"]))
    if not root.is_absolute() and base_dir is not None:
        root = (Path(base_dir) / root).resolve()

    geometry = ImageGeometry.from_dict(data["geometry"]) if data["geometry"] else None
    return DatasetManifest(
        name=str(data["name"]),
        root=root,
        label_space=_parse_label_space(data["label_space"]),
        items=[_parse_item(entry) for entry in data["items"]],
        geometry=geometry,
    )


def load_manifest(path: Union[str, Path], validate_images: bool = False,
                  threads: int = 1) -> DatasetManifest:
    """
    載入清單檔

    Args:
        path: 清單檔路徑
        validate_images: 是否檢查每張影像可解碼且幾何一致（驗證模式）
        threads: 驗證時的解碼執行緒數

    Returns:
        滿足所有不變量的 DatasetManifest（保留檔案中的項目順序）

    Raises:
        FileNotFoundError: 檔案不存在
        ManifestError: 解析失敗、重複 ID、標籤超出範圍、影像無法解析（驗證模式）
    """
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"清單檔不存在: {manifest_path}")

    try:
        with open(manifest_path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as e:
        raise ManifestError(f"清單檔解析失敗: {manifest_path} ({e})", field="manifest",
                            value=str(manifest_path))

    manifest = manifest_from_dict(data, base_dir=manifest_path.parent.resolve())
    logger.info(f"載入清單 {manifest.name}: N={len(manifest)} "
                f"(real={manifest.n_real}, generated={manifest.n_gen}), K={manifest.num_classes}")

    if validate_images:
        result = manifest.validate_images(threads=threads)
        if not result.is_valid:
            error = result.first_error()
            raise ManifestError(f"影像驗證失敗（共 {len(result.errors)} 筆），首筆 {error.field}: {error}",
                                field="items.path", value=error.field)
    return manifest


def write_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    """
    以原子方式寫入清單檔；root 以相對於清單檔目錄的路徑儲存

    Args:
        manifest: 清單
        path: 目標檔案路徑

    Returns:
        寫入的路徑
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = manifest.to_dict(relative_to=target.parent.resolve())
    atomic_write_json(target, payload)
    logger.info(f"清單已寫入: {target} (N={len(manifest)})")
    return target


def load_label_space(path: Union[str, Path]) -> List[ClassDescriptor]:
    """
    載入標籤空間

    支援兩種格式：
    - 清單檔（.json）：取其 label_space
    - 類別列表檔：每行 `key` 或 `key<TAB>顯示名稱`，行序即索引

    Args:
        path: 檔案路徑

    Returns:
        ClassDescriptor 列表
    """
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"標籤空間檔不存在: {source}")

    if source.suffix.lower() == ".json":
        try:
            with open(source, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as e:
            raise ManifestError(f"標籤空間檔解析失敗: {source} ({e})", field="label_space")
        raw = data.get("label_space") if isinstance(data, dict) else data
        label_space = _parse_label_space(raw)
    else:
        label_space = []
        with open(source, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.rstrip("\r\n")
                if not line.strip():
                    continue
                key, _, display = line.partition("\t")
                key = key.strip()
                label_space.append(ClassDescriptor(index=len(label_space), key=key,
                                                   display_name=display.strip() or key))
    validate_label_space(label_space)
    return label_space


def same_label_space(first: Sequence[ClassDescriptor], second: Sequence[ClassDescriptor]) -> bool:
    """兩個標籤空間是否有相同的鍵與順序"""
    return [d.key for d in first] == [d.key for d in second]
