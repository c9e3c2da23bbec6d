"""
離線增強模組

對清單中每個項目套用增強並寫出副本：

    <out>/<item-id>.png
    <out>/manifest.json          整數標籤為軟標籤的最大權重類別
    <out>/soft_labels.tsv        item_id<TAB>類別:權重,類別:權重

每個項目的種子為 hash64(seed, item.id)；混合操作的搭配項目也由種子決定。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from augment.augmix import AugmixConfig, augmix
from augment.mixing import (AugmentationError, MixResult, SoftLabel, cutmix, cutmix_mixup_switch, mixup)
from dataset.image_io import ImageBuffer, decode_image, encode_png
from dataset.manifest import DatasetManifest, ItemRecord, write_manifest
from utils.file_ops import atomic_write_bytes, atomic_write_text
from utils.seeding import hash64, make_rng
from utils.validators import validate_positive, validate_probability, validate_seed


MANIFEST_FILE = "manifest.json"
SOFT_LABEL_FILE = "soft_labels.tsv"

_UNSAFE_ID_CHARS = ("/", "\\", "\0")


class AugmentOp(str, Enum):
    MIXUP = "mixup"
    CUTMIX = "cutmix"
    SWITCH = "switch"
    AUGMIX = "augmix"

    @classmethod
    def parse(cls, name: Union[str, "AugmentOp"]) -> "AugmentOp":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise AugmentationError(f"未知的增強操作: {name}（可用: mixup, cutmix, switch, augmix）",
                                    field="op", value=name)

    @property
    def pairs(self) -> bool:
        return self is not AugmentOp.AUGMIX


@dataclass(frozen=True)
class MixConfig:
    """混合操作參數（預設值與 CutMix+Mixup 切換設定相同）"""
    alpha_mixup: float = 0.8
    alpha_cutmix: float = 1.0
    p_switch: float = 0.5

    def __post_init__(self):
        validate_positive(self.alpha_mixup, "alpha_mixup")
        validate_positive(self.alpha_cutmix, "alpha_cutmix")
        validate_probability(self.p_switch, "p_switch")


def format_soft_label(item_id: str, label: SoftLabel) -> str:
    entries = ",".join(f"{index}:{weight!r}" for index, weight in label.entries())
    return f"{item_id}\t{entries}"


def parse_soft_labels(text: str, num_classes: int) -> Dict[str, SoftLabel]:
    """讀回 soft_labels.tsv 內容"""
    labels = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        item_id, sep, body = line.partition("\t")
        if not sep:
            raise AugmentationError(f"軟標籤檔第 {line_number} 行缺少 tab", field="soft_labels", value=line_number)
        weights = [0.0] * num_classes
        try:
            for entry in body.split(","):
                index, _, weight = entry.partition(":")
                weights[int(index)] += float(weight)
        except (ValueError, IndexError) as e:
            raise AugmentationError(f"軟標籤檔第 {line_number} 行格式錯誤: {e}", field="soft_labels",
                                    value=line_number)
        labels[item_id] = SoftLabel(weights)
    return labels


def partner_index(seed: int, item_id: str, count: int) -> int:
    """混合操作的搭配項目索引"""
    return int(make_rng(hash64(seed, item_id, "partner")).integers(count))


class OfflineAugmenter:
    """離線增強器"""

    def __init__(self, op: Union[str, AugmentOp], seed: int, mix_config: Optional[MixConfig] = None,
                 augmix_config: Optional[AugmixConfig] = None, threads: int = 1):
        self.op = AugmentOp.parse(op)
        self.seed = validate_seed(seed)
        self.mix_config = mix_config or MixConfig()
        self.augmix_config = augmix_config or AugmixConfig()
        self.threads = max(1, threads)
        self.logger = logging.getLogger(f"{__name__}.OfflineAugmenter")

    def _mix(self, a: ImageBuffer, label_a: int, b: ImageBuffer, label_b: int, seed: int,
             num_classes: int) -> MixResult:
        cfg = self.mix_config
        if self.op is AugmentOp.MIXUP:
            return mixup(a, label_a, b, label_b, cfg.alpha_mixup, seed, num_classes)
        if self.op is AugmentOp.CUTMIX:
            return cutmix(a, label_a, b, label_b, cfg.alpha_cutmix, seed, num_classes)
        return cutmix_mixup_switch(a, label_a, b, label_b, cfg.p_switch, cfg.alpha_cutmix, cfg.alpha_mixup,
                                   seed, num_classes)

    def _augment_item(self, manifest: DatasetManifest, item: ItemRecord,
                      out: Path) -> Tuple[ItemRecord, SoftLabel]:
        item_seed = hash64(self.seed, item.id)
        image = decode_image(manifest.resolve(item))
        provenance = f"augment:{self.op.value}"
        if self.op.pairs:
            partner = manifest.items[partner_index(self.seed, item.id, len(manifest))]
            result = self._mix(image, item.label, decode_image(manifest.resolve(partner)), partner.label,
                               item_seed, manifest.num_classes)
            output, soft_label = result.image, result.label
            provenance = f"{provenance}:{result.branch.value}:{partner.id}:{result.lam!r}"
        else:
            output = augmix(image, self.augmix_config, item_seed)
            soft_label = SoftLabel.onehot(item.label, manifest.num_classes)

        relative = f"{item.id}.png"
        atomic_write_bytes(out / relative, encode_png(output))
        record = ItemRecord(id=item.id, path=relative, label=soft_label.hard_label(), source=item.source,
                            provenance=provenance)
        return record, soft_label

    def run(self, manifest: DatasetManifest, out: Union[str, Path],
            name: Optional[str] = None) -> Tuple[DatasetManifest, Dict[str, SoftLabel]]:
        """
        執行離線增強

        Args:
            manifest: 輸入清單（混合操作需要一致的 geometry）
            out: 輸出目錄
            name: 輸出清單名稱（預設 "<name>-<op>"）

        Returns:
            (輸出清單, 項目 ID → 軟標籤)
        """
        if self.op.pairs and manifest.geometry is None and len(manifest):
            raise AugmentationError(f"清單 {manifest.name} 的影像幾何不一致，無法混合", field="geometry")
        for item in manifest.items:
            if any(ch in item.id for ch in _UNSAFE_ID_CHARS) or item.id in (".", ".."):
                raise AugmentationError(f"項目 ID 不能作為檔名: {item.id!r}", field="items.id", value=item.id)

        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        if not len(manifest):
            self.logger.warning(f"清單 {manifest.name} 沒有項目")

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            results: List[Tuple[ItemRecord, SoftLabel]] = list(
                pool.map(lambda item: self._augment_item(manifest, item, out), manifest.items))

        augmented = manifest.with_items([record for record, _ in results],
                                        name=name or f"{manifest.name}-{self.op.value}", root=out.resolve())
        write_manifest(augmented, out / MANIFEST_FILE)
        soft_labels = {record.id: label for record, label in results}
        atomic_write_text(out / SOFT_LABEL_FILE, _render_soft_labels(soft_labels.items()))
        self.logger.info(f"離線增強 {self.op.value}: {len(augmented)} 項 → {out}")
        return augmented, soft_labels


def _render_soft_labels(entries: Iterable[Tuple[str, SoftLabel]]) -> str:
    lines = [format_soft_label(item_id, label) for item_id, label in entries]
    return "\n".join(lines) + ("\n" if lines else "")


def augment_manifest(manifest: DatasetManifest, op: Union[str, AugmentOp], seed: int, out: Union[str, Path],
                     mix_config: Optional[MixConfig] = None, augmix_config: Optional[AugmixConfig] = None,
                     threads: int = 1) -> Tuple[DatasetManifest, Dict[str, SoftLabel]]:
    """便利函式：建立 OfflineAugmenter 並執行"""
    augmenter = OfflineAugmenter(op, seed, mix_config=mix_config, augmix_config=augmix_config, threads=threads)
    return augmenter.run(manifest, out)
