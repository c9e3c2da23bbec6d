"""
影像混合增強模組

- SoftLabel：長度 K 的機率向量
- mixup：λ ~ Beta(α, α)，影像與標籤線性混合
- cutmix：由 b 剪下面積比約 (1−λ) 的矩形貼到 a，λ 依裁切後面積重算
- cutmix_mixup_switch：以機率 p_switch 選 cutmix，否則 mixup

所有隨機性來自 make_rng(seed)；λ 與方框可透過關鍵字參數直接注入（測試用）。
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from dataset.image_io import ImageBuffer
from utils.seeding import hash64, make_rng
from utils.validators import ValidationError, validate_positive, validate_probability, validate_seed


SOFT_LABEL_TOLERANCE = 1e-9


class AugmentationError(ValidationError):
    """增強參數或輸入錯誤"""
    pass


class MixBranch(str, Enum):
    MIXUP = "mixup"
    CUTMIX = "cutmix"


@dataclass(frozen=True)
class SoftLabel:
    """類別機率向量：權重非負且總和為 1"""
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise AugmentationError(f"軟標籤必須是非空向量: {weights.shape}", field="weights")
        if (weights < 0).any() or abs(float(weights.sum()) - 1.0) > SOFT_LABEL_TOLERANCE:
            raise AugmentationError("軟標籤權重必須非負且總和為 1", field="weights", value=weights.tolist())
        object.__setattr__(self, "weights", weights)

    @classmethod
    def onehot(cls, label: int, num_classes: int) -> "SoftLabel":
        return cls.mix(label, label, 1.0, num_classes)

    @classmethod
    def mix(cls, label_a: int, label_b: int, lam: float, num_classes: int) -> "SoftLabel":
        """λ·onehot(a) + (1−λ)·onehot(b)"""
        for name, label in (("label_a", label_a), ("label_b", label_b)):
            if not 0 <= label < num_classes:
                raise AugmentationError(f"{name} 超出範圍: {label}（K={num_classes}）", field=name, value=label)
        weights = np.zeros(num_classes)
        weights[label_a] += lam
        weights[label_b] += 1.0 - lam
        return cls(weights)

    @property
    def num_classes(self) -> int:
        return int(self.weights.size)

    def entries(self) -> List[Tuple[int, float]]:
        """非零權重的 (類別索引, 權重)，依索引排序"""
        return [(int(index), float(self.weights[index])) for index in np.flatnonzero(self.weights)]

    def hard_label(self) -> int:
        """最大權重的類別（同分取最小索引）"""
        return int(np.argmax(self.weights))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SoftLabel):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())


@dataclass(frozen=True)
class Box:
    """影像上的矩形 [top, bottom) × [left, right)"""
    top: int
    left: int
    bottom: int
    right: int

    @property
    def area(self) -> int:
        return max(0, self.bottom - self.top) * max(0, self.right - self.left)

    def clipped(self, height: int, width: int) -> "Box":
        top, bottom = (int(np.clip(v, 0, height)) for v in (self.top, self.bottom))
        left, right = (int(np.clip(v, 0, width)) for v in (self.left, self.right))
        return Box(top, left, max(top, bottom), max(left, right))


@dataclass(frozen=True)
class MixResult:
    """混合結果；branch 與 lam 供稽核（lam 為實際用於標籤的係數）"""
    image: ImageBuffer
    label: SoftLabel
    branch: MixBranch
    lam: float
    box: Optional[Box] = None


def _check_pair(a: ImageBuffer, b: ImageBuffer):
    if a.geometry != b.geometry:
        raise AugmentationError(f"兩張影像幾何不同: {a.geometry} / {b.geometry}", field="geometry",
                                value=[str(a.geometry), str(b.geometry)])


def _check_lam(lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise AugmentationError(f"λ 必須位於 [0,1]: {lam}", field="lam", value=lam)
    return float(lam)


def mixup(a: ImageBuffer, label_a: int, b: ImageBuffer, label_b: int, alpha: float, seed: int,
          num_classes: int, lam: Optional[float] = None) -> MixResult:
    """
    Mixup：輸出 = λ·a + (1−λ)·b，軟標籤同比例

    Args:
        a, b: 相同幾何的影像
        label_a, label_b: 類別索引
        alpha: Beta 分布參數
        seed: 64 位元種子
        num_classes: 類別數 K
        lam: 直接指定 λ（測試用）

    Returns:
        MixResult
    """
    _check_pair(a, b)
    validate_positive(alpha, "alpha")
    drawn = float(make_rng(validate_seed(seed)).beta(alpha, alpha))
    lam = _check_lam(drawn if lam is None else lam)
    # a + (1−λ)(b − a)：λ = 1 或 a = b 時位元相同
    pixels = a.pixels + (1.0 - lam) * (b.pixels - a.pixels)
    return MixResult(ImageBuffer.from_clamped(pixels), SoftLabel.mix(label_a, label_b, lam, num_classes),
                     MixBranch.MIXUP, lam)


def sample_cutmix_box(height: int, width: int, lam: float, rng: np.random.Generator) -> Box:
    """
    依 λ 取樣 CutMix 方框

    邊長為 √(1−λ) 倍的影像邊長，中心均勻分布，超出邊界的部分裁掉。
    """
    cut_ratio = np.sqrt(1.0 - lam)
    cut_h = int(height * cut_ratio)
    cut_w = int(width * cut_ratio)
    cy = int(rng.integers(height))
    cx = int(rng.integers(width))
    return Box(cy - cut_h // 2, cx - cut_w // 2, cy + cut_h // 2, cx + cut_w // 2).clipped(height, width)


def cutmix(a: ImageBuffer, label_a: int, b: ImageBuffer, label_b: int, alpha: float, seed: int,
           num_classes: int, lam: Optional[float] = None, box: Optional[Box] = None) -> MixResult:
    """
    CutMix：將 b 的矩形區域貼到 a

    λ′ = 1 − 方框面積 / 影像面積；軟標籤 = λ′·onehot(a) + (1−λ′)·onehot(b)。

    Args:
        a, b: 相同幾何的影像
        label_a, label_b: 類別索引
        alpha: Beta 分布參數
        seed: 64 位元種子
        num_classes: 類別數 K
        lam: 直接指定 λ（測試用）
        box: 直接指定方框（測試用，會裁到影像範圍）

    Returns:
        MixResult（box 為實際貼上的方框）
    """
    _check_pair(a, b)
    validate_positive(alpha, "alpha")
    rng = make_rng(validate_seed(seed))
    drawn = float(rng.beta(alpha, alpha))
    lam = _check_lam(drawn if lam is None else lam)

    height, width = a.height, a.width
    box = box.clipped(height, width) if box is not None else sample_cutmix_box(height, width, lam, rng)
    pixels = a.pixels.copy()
    pixels[box.top:box.bottom, box.left:box.right] = b.pixels[box.top:box.bottom, box.left:box.right]
    adjusted = 1.0 - box.area / (height * width)
    return MixResult(ImageBuffer(pixels), SoftLabel.mix(label_a, label_b, adjusted, num_classes),
                     MixBranch.CUTMIX, adjusted, box)


def choose_branch(seed: int, p_switch: float) -> MixBranch:
    """以機率 p_switch 選 cutmix"""
    draw = make_rng(hash64(seed, "switch")).random()
    return MixBranch.CUTMIX if draw < p_switch else MixBranch.MIXUP


def cutmix_mixup_switch(a: ImageBuffer, label_a: int, b: ImageBuffer, label_b: int, p_switch: float,
                        alpha_cutmix: float, alpha_mixup: float, seed: int, num_classes: int) -> MixResult:
    """
    以機率 p_switch 套用 cutmix，否則 mixup

    分支選擇與分支內的 λ 使用由 seed 衍生的獨立種子。
    """
    validate_probability(p_switch, "p_switch")
    validate_seed(seed)
    branch = choose_branch(seed, p_switch)
    if branch is MixBranch.CUTMIX:
        return cutmix(a, label_a, b, label_b, alpha_cutmix, hash64(seed, "cutmix"), num_classes)
    return mixup(a, label_a, b, label_b, alpha_mixup, hash64(seed, "mixup"), num_classes)
