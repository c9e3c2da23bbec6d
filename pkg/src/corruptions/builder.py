"""
損壞測試集建構模組

將測試清單中的每個項目在每個 (kind, severity) 下套用損壞，輸出：

    <out>/<kind>/<severity>/<item-id>.png
    <out>/<kind>/<severity>/manifest.json
    <out>/index.json

每個項目的種子為 hash64(seed, item.id, kind, severity)，
輸出與處理順序、執行緒數無關。
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from corruptions.kernels import apply_corruption
from corruptions.kinds import (CorruptionError, CorruptionKind, CorruptionSpec, SEVERITIES,
                               TestsetProfile, validate_severity)
from corruptions.params import SeverityTable, default_severity_table
from dataset.image_io import ImageBuffer, decode_image, encode_png
from dataset.manifest import DatasetManifest, ItemRecord, load_manifest, write_manifest
from utils.file_ops import atomic_write_bytes, atomic_write_json
from utils.seeding import hash64
from utils.validators import validate_seed
from utils.version import __version__


INDEX_FILE = "index.json"
CELL_MANIFEST = "manifest.json"

_UNSAFE_ID_CHARS = ("/", "\\", "\0")


def item_seed(seed: int, item_id: str, kind: CorruptionKind, severity: int) -> int:
    """單一項目在單一格子的種子"""
    return hash64(seed, item_id, kind.value, severity)


@dataclass(frozen=True)
class CorruptedTree:
    """損壞測試集目錄的描述"""
    root: Path
    profile: TestsetProfile
    seed: int
    kinds: Tuple[CorruptionKind, ...]
    severities: Tuple[int, ...]
    item_count: int
    table_version: str
    toolkit_version: str = __version__

    def cell_dir(self, kind: Union[str, CorruptionKind], severity: int) -> Path:
        return self.root / CorruptionKind.parse(kind).value / str(severity)

    def cell_manifest_path(self, kind: Union[str, CorruptionKind], severity: int) -> Path:
        return self.cell_dir(kind, severity) / CELL_MANIFEST

    def cells(self) -> List[Tuple[CorruptionKind, int]]:
        return [(kind, severity) for kind in self.kinds for severity in self.severities]

    def load_cell(self, kind: Union[str, CorruptionKind], severity: int) -> DatasetManifest:
        """載入某一格的清單"""
        kind = CorruptionKind.parse(kind)
        validate_severity(severity)
        if kind not in self.kinds or severity not in self.severities:
            raise CorruptionError(f"損壞測試集中沒有格子 {kind.value}/{severity}",
                                  field="cell", value=(kind.value, severity))
        return load_manifest(self.cell_manifest_path(kind, severity))

    @property
    def image_count(self) -> int:
        return self.item_count * len(self.kinds) * len(self.severities)

    def to_dict(self) -> dict:
        return {
            "profile": self.profile.value,
            "seed": self.seed,
            "kinds": [kind.value for kind in self.kinds],
            "severities": list(self.severities),
            "item_count": self.item_count,
            "toolkit_version": self.toolkit_version,
            "severity_table_version": self.table_version,
        }


def load_corrupted_tree(root: Union[str, Path]) -> CorruptedTree:
    """由 index.json 載入損壞測試集描述"""
    root = Path(root)
    index_path = root / INDEX_FILE
    if not index_path.is_file():
        raise FileNotFoundError(f"找不到損壞測試集索引: {index_path}")
    try:
        with open(index_path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return CorruptedTree(
            root=root,
            profile=TestsetProfile.parse(data["profile"]),
            seed=int(data["seed"]),
            kinds=tuple(CorruptionKind.parse(kind) for kind in data["kinds"]),
            severities=tuple(validate_severity(int(s)) for s in data["severities"]),
            item_count=int(data["item_count"]),
            table_version=str(data.get("severity_table_version", "")),
            toolkit_version=str(data.get("toolkit_version", "")),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise CorruptionError(f"損壞測試集索引格式錯誤: {index_path} ({e})",
                              field="index", value=str(index_path))


class CorruptedTestsetBuilder:
    """損壞測試集建構器"""

    def __init__(self, profile: Union[str, TestsetProfile], seed: int,
                 table: Optional[SeverityTable] = None,
                 frost_texture: Optional[ImageBuffer] = None,
                 kinds: Optional[Iterable[Union[str, CorruptionKind]]] = None,
                 severities: Iterable[int] = SEVERITIES,
                 threads: int = 1):
        self.profile = TestsetProfile.parse(profile)
        self.seed = validate_seed(seed)
        self.table = table or default_severity_table()
        self.frost_texture = frost_texture
        self.threads = max(1, int(threads))
        self.logger = logging.getLogger(f"{__name__}.CorruptedTestsetBuilder")

        allowed = self.profile.kinds
        if kinds is None:
            self.kinds = allowed
        else:
            requested = {CorruptionKind.parse(kind) for kind in kinds}
            excluded = sorted(kind.value for kind in requested if kind not in allowed)
            if excluded:
                raise CorruptionError(f"設定檔 {self.profile.value} 不包含: {', '.join(excluded)}",
                                      field="kinds", value=excluded)
            self.kinds = tuple(kind for kind in allowed if kind in requested)
        self.severities = tuple(sorted({validate_severity(s) for s in severities}))

    def _check_manifest(self, manifest: DatasetManifest):
        if manifest.geometry is None:
            raise CorruptionError(
                f"清單 {manifest.name} 沒有統一的影像幾何，請先重取樣（build-v2）",
                field="geometry")
        for item in manifest.items:
            if any(ch in item.id for ch in _UNSAFE_ID_CHARS) or item.id in (".", ".."):
                raise CorruptionError(f"項目 ID 不能作為檔名: {item.id!r}", field="items.id", value=item.id)

    def _corrupt_item(self, manifest: DatasetManifest, item: ItemRecord, out: Path) -> int:
        image = decode_image(manifest.resolve(item))
        if image.geometry != manifest.geometry:
            raise CorruptionError(f"影像幾何 {image.geometry} 與清單 {manifest.geometry} 不一致: {item.id}",
                                  field="items.path", value=item.id)
        written = 0
        for kind in self.kinds:
            for severity in self.severities:
                spec = CorruptionSpec(kind, severity, item_seed(self.seed, item.id, kind, severity))
                corrupted = apply_corruption(image, spec, self.table, self.frost_texture)
                target = out / kind.value / str(severity) / f"{item.id}.png"
                atomic_write_bytes(target, encode_png(corrupted))
                written += 1
        return written

    def build(self, manifest: DatasetManifest, out: Union[str, Path]) -> CorruptedTree:
        """
        建立損壞測試集

        Args:
            manifest: 測試清單
            out: 輸出目錄

        Returns:
            CorruptedTree
        """
        self._check_manifest(manifest)
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for kind in self.kinds:
            for severity in self.severities:
                (out / kind.value / str(severity)).mkdir(parents=True, exist_ok=True)

        self.logger.info(f"建立損壞測試集: {len(manifest)} 項 × {len(self.kinds)} 類 × "
                         f"{len(self.severities)} 級（{self.profile.value}, threads={self.threads}）")
        if len(manifest) == 0:
            self.logger.warning(f"清單 {manifest.name} 沒有項目，只輸出空的格子清單")

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            total = sum(pool.map(lambda item: self._corrupt_item(manifest, item, out), manifest.items))

        for kind in self.kinds:
            for severity in self.severities:
                cell_dir = out / kind.value / str(severity)
                items = [ItemRecord(id=item.id, path=f"{item.id}.png", label=item.label,
                                    source=item.source, provenance=item.provenance)
                         for item in manifest.items]
                cell = manifest.with_items(items, name=f"{manifest.name}-{kind.value}-{severity}",
                                           root=cell_dir.resolve())
                write_manifest(cell, cell_dir / CELL_MANIFEST)

        tree = CorruptedTree(root=out, profile=self.profile, seed=self.seed, kinds=self.kinds,
                             severities=self.severities, item_count=len(manifest),
                             table_version=self.table.version)
        atomic_write_json(out / INDEX_FILE, tree.to_dict())
        self.logger.info(f"損壞測試集完成: {total} 張影像 → {out}")
        return tree


def build_corrupted_testset(manifest: DatasetManifest, profile: Union[str, TestsetProfile],
                            seed: int, out: Union[str, Path], threads: int = 1,
                            table: Optional[SeverityTable] = None,
                            frost_texture: Optional[ImageBuffer] = None,
                            kinds: Optional[Iterable[Union[str, CorruptionKind]]] = None) -> CorruptedTree:
    """建立損壞測試集（natural 使用 15 類，medical 使用 12 個非天氣類）"""
    builder = CorruptedTestsetBuilder(profile, seed, table=table, frost_texture=frost_texture,
                                      kinds=kinds, threads=threads)
    return builder.build(manifest, out)
