"""
抽樣與混合模組

- stratified_subset：依類別分層的隨機子集（有限資料實驗）
- mix_datasets：真實資料 ⊕ 抽樣後的生成資料
"""

import os
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from dataset.manifest import (
    DatasetManifest, ItemRecord, ItemSource, ManifestError, same_label_space
)
from utils.seeding import hash64, make_rng
from utils.validators import validate_fraction, validate_seed


logger = logging.getLogger(__name__)

ID_PREFIXES = {ItemSource.REAL: "real-", ItemSource.GENERATED: "generated-"}


def _positions_by_class(manifest: DatasetManifest) -> List[List[int]]:
    positions: List[List[int]] = [[] for _ in range(manifest.num_classes)]
    for position, item in enumerate(manifest.items):
        positions[item.label].append(position)
    return positions


def _choose(positions: Sequence[int], count: int, seed: int) -> List[int]:
    """在 positions 中以種子均勻抽取 count 個，回傳依原順序排列的位置"""
    if count >= len(positions):
        return list(positions)
    rng = make_rng(seed)
    picked = rng.choice(len(positions), size=count, replace=False)
    return [positions[i] for i in sorted(int(p) for p in picked)]


def stratified_subset(manifest: DatasetManifest, fraction: float, seed: int,
                      stratify: bool = True, name: Optional[str] = None) -> DatasetManifest:
    """
    依類別分層抽取子集

    每個類別 c（n_c 項）抽取 round(fraction × n_c) 項（四捨六入五成雙），
    輸出保留標籤空間與原項目順序。

    Args:
        manifest: 來源清單
        fraction: 比例 (0, 1]
        seed: 64 位元種子
        stratify: False 時改為整體均勻抽取 round(fraction × N) 項
        name: 輸出清單名稱

    Returns:
        子集清單

    Raises:
        ValidationError: fraction 或 seed 無效
        ManifestError: 某類別沒有項目，或因四捨五入而被清空
    """
    fraction = validate_fraction(fraction, field="fraction")
    seed = validate_seed(seed)
    output_name = name or f"{manifest.name}-subset-{fraction:g}"

    if not stratify:
        count = round(fraction * len(manifest))
        if len(manifest) and count == 0:
            raise ManifestError(f"比例 {fraction} 使子集為空（N={len(manifest)}）",
                                field="fraction", value=fraction)
        chosen = _choose(range(len(manifest)), count, hash64(seed, "subset"))
        logger.info(f"均勻子集: {len(manifest)} → {len(chosen)} 項")
        return manifest.with_items([manifest.items[p] for p in chosen], name=output_name)

    selected: List[int] = []
    for label, positions in enumerate(_positions_by_class(manifest)):
        if not positions:
            raise ManifestError(f"類別 {manifest.key_of(label)} 沒有任何項目，無法分層抽樣",
                                field="label_space", value=manifest.key_of(label))
        count = round(fraction * len(positions))
        if count == 0:
            raise ManifestError(
                f"類別 {manifest.key_of(label)} 以比例 {fraction} 抽樣後被清空（n={len(positions)}）",
                field="fraction", value=fraction)
        selected.extend(_choose(positions, count, hash64(seed, "subset", manifest.key_of(label))))

    selected.sort()
    logger.info(f"分層子集: {len(manifest)} → {len(selected)} 項（比例 {fraction}）")
    return manifest.with_items([manifest.items[p] for p in selected], name=output_name)


def allocate_quotas(class_counts: Sequence[int], take: int) -> List[int]:
    """
    以最大餘數法將 take 依類別比例分配

    Args:
        class_counts: 每類別可用項數
        take: 要抽取的總數（≤ 總可用數）

    Returns:
        每類別的配額；總和等於 take，且不超過該類別可用數
    """
    total = sum(class_counts)
    if take == 0 or total == 0:
        return [0] * len(class_counts)
    exact = [take * count / total for count in class_counts]
    quotas = [int(np.floor(value)) for value in exact]
    remaining = take - sum(quotas)
    # 餘數由大到小，同餘數時索引小者優先
    order = sorted(range(len(class_counts)), key=lambda c: (-(exact[c] - quotas[c]), c))
    for c in order:
        if remaining == 0:
            break
        if quotas[c] < class_counts[c]:
            quotas[c] += 1
            remaining -= 1
    return quotas


def _rebase(manifest: DatasetManifest, item: ItemRecord, root: Path) -> ItemRecord:
    absolute = manifest.resolve(item).resolve()
    relative = Path(os.path.relpath(absolute, root)).as_posix()
    return ItemRecord(id=ID_PREFIXES[item.source] + item.id, path=relative, label=item.label,
                      source=item.source, provenance=item.provenance)


def resolve_take(real: DatasetManifest, generated: DatasetManifest,
                 count: Optional[int] = None, ratio: Optional[float] = None) -> int:
    """將 count 或 ratio（take = round(ratio × N_real)）換算為生成項數"""
    if (count is None) == (ratio is None):
        raise ManifestError("必須指定 count 或 ratio 其中之一", field="take")
    if count is not None:
        if isinstance(count, bool) or not isinstance(count, int) or count < 0:
            raise ManifestError(f"count 必須是非負整數: {count!r}", field="count", value=count)
        take = count
    else:
        if isinstance(ratio, bool) or not isinstance(ratio, (int, float)) or ratio < 0:
            raise ManifestError(f"ratio 必須是非負數值: {ratio!r}", field="ratio", value=ratio)
        if len(real) == 0:
            raise ManifestError("真實資料為空時無法以 ratio 指定數量，請改用 count",
                                field="ratio", value=ratio)
        take = round(ratio * len(real))
    if take > len(generated):
        raise ManifestError(f"要求的生成項數 {take} 超過可用的 N_gen={len(generated)}",
                            field="take", value=take)
    return take


def mix_datasets(real: DatasetManifest, generated: DatasetManifest, seed: int,
                 count: Optional[int] = None, ratio: Optional[float] = None,
                 name: Optional[str] = None) -> DatasetManifest:
    """
    將真實資料與分層抽樣的生成資料串接為 D_mix

    輸出包含所有真實項目（依原順序）以及 take 個生成項目（依原順序），
    項目 ID 加上來源前綴，root 為兩個來源 root 的共同上層目錄。

    Args:
        real: 真實資料清單
        generated: 生成資料清單
        seed: 64 位元種子
        count: 生成項數
        ratio: 相對於 N_real 的比例（與 count 擇一）
        name: 輸出清單名稱

    Returns:
        |D_mix| = N_real + take 的清單

    Raises:
        ManifestError: 標籤空間不一致、幾何不一致、take > N_gen
    """
    seed = validate_seed(seed)
    if not same_label_space(real.label_space, generated.label_space):
        raise ManifestError("真實與生成資料的標籤空間不一致（鍵或順序不同）",
                            field="label_space")
    take = resolve_take(real, generated, count=count, ratio=ratio)

    # 幾何未知（None）的一方不比較
    if None not in (real.geometry, generated.geometry) and real.geometry != generated.geometry:
        raise ManifestError(f"影像幾何不一致: real={real.geometry}, generated={generated.geometry}",
                            field="geometry", value=str(generated.geometry))

    quotas = allocate_quotas(generated.class_counts(), take)
    chosen: List[int] = []
    for label, positions in enumerate(_positions_by_class(generated)):
        if quotas[label]:
            chosen.extend(_choose(positions, quotas[label],
                                  hash64(seed, "mix", generated.key_of(label))))
    chosen.sort()

    root = Path(os.path.commonpath([str(real.root.resolve()), str(generated.root.resolve())]))
    items = [_rebase(real, item, root) for item in real.items]
    items += [_rebase(generated, generated.items[p], root) for p in chosen]

    mixed = DatasetManifest(
        name=name or f"{real.name}+{generated.name}",
        root=root,
        label_space=real.label_space,
        items=items,
        geometry=real.geometry if real.geometry is not None else generated.geometry,
    )
    per_class: Dict[str, int] = {generated.key_of(c): q for c, q in enumerate(quotas) if q}
    logger.info(f"混合完成: N_real={len(real)} + take={take} → N={len(mixed)}")
    logger.debug(f"生成資料各類別配額: {per_class}")
    return mixed
