"""
Mixup / CutMix / 切換測試
"""

import numpy as np
import pytest

from augment.mixing import (AugmentationError, Box, MixBranch, SoftLabel, cutmix, cutmix_mixup_switch,
                            mixup)
from dataset.image_io import ImageBuffer
from utils.validators import ValidationError
from tests.test_helpers import image_helper


@pytest.mark.unit
@pytest.mark.augment
class TestSoftLabel:
    """軟標籤測試"""

    def test_mix_weights(self):
        label = SoftLabel.mix(0, 2, 0.75, 4)
        assert label.entries() == [(0, 0.75), (2, 0.25)]
        assert label.hard_label() == 0

    def test_same_label_is_onehot(self):
        assert SoftLabel.mix(1, 1, 0.3, 3) == SoftLabel.onehot(1, 3)

    def test_invalid_weights(self):
        with pytest.raises(AugmentationError):
            SoftLabel(np.array([0.5, 0.6]))
        with pytest.raises(AugmentationError):
            SoftLabel(np.array([1.5, -0.5]))

    def test_label_out_of_range(self):
        with pytest.raises(AugmentationError) as exc_info:
            SoftLabel.mix(0, 5, 0.5, 3)
        assert exc_info.value.field == "label_b"


@pytest.mark.unit
@pytest.mark.augment
class TestMixup:
    """Mixup 測試"""

    def setup_method(self):
        self.a = ImageBuffer(image_helper.random_pixels(1, 16, 16))
        self.b = ImageBuffer(image_helper.random_pixels(2, 16, 16))

    def test_lambda_one_returns_a(self):
        result = mixup(self.a, 0, self.b, 1, alpha=0.8, seed=3, num_classes=2, lam=1.0)
        assert result.image.pixels.tobytes() == self.a.pixels.tobytes()
        assert result.label == SoftLabel.onehot(0, 2)
        assert result.branch is MixBranch.MIXUP

    def test_linearity_on_constants(self):
        a = ImageBuffer(image_helper.constant_pixels(0.2, 8, 8))
        b = ImageBuffer(image_helper.constant_pixels(0.6, 8, 8))
        result = mixup(a, 0, b, 1, alpha=0.8, seed=3, num_classes=2, lam=0.5)
        assert np.allclose(result.image.pixels, 0.4, atol=1e-12)
        assert result.label.entries() == [(0, 0.5), (1, 0.5)]

    def test_self_mix_is_identity(self):
        for seed in range(20):
            result = mixup(self.a, 1, self.a, 1, alpha=0.8, seed=seed, num_classes=2)
            assert result.image == self.a

    def test_deterministic(self):
        first = mixup(self.a, 0, self.b, 1, alpha=0.8, seed=99, num_classes=2)
        second = mixup(self.a, 0, self.b, 1, alpha=0.8, seed=99, num_classes=2)
        assert first.lam == second.lam
        assert first.image == second.image
        assert first.label == second.label
        assert 0.0 <= first.lam <= 1.0

    def test_geometry_mismatch(self):
        other = ImageBuffer(image_helper.random_pixels(2, 16, 8))
        with pytest.raises(AugmentationError) as exc_info:
            mixup(self.a, 0, other, 1, alpha=0.8, seed=1, num_classes=2)
        assert exc_info.value.field == "geometry"

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValidationError) as exc_info:
            mixup(self.a, 0, self.b, 1, alpha=0.0, seed=1, num_classes=2)
        assert exc_info.value.field == "alpha"


@pytest.mark.unit
@pytest.mark.augment
class TestCutmix:
    """CutMix 測試"""

    def setup_method(self):
        self.a = ImageBuffer(image_helper.random_pixels(3, 64, 64))
        self.b = ImageBuffer(image_helper.random_pixels(4, 64, 64))

    def test_full_box_returns_b(self):
        result = cutmix(self.a, 0, self.b, 1, alpha=1.0, seed=1, num_classes=2, box=Box(0, 0, 64, 64))
        assert result.image == self.b
        assert result.label == SoftLabel.onehot(1, 2)

    def test_zero_area_box_returns_a(self):
        result = cutmix(self.a, 0, self.b, 1, alpha=1.0, seed=1, num_classes=2, box=Box(10, 10, 10, 10))
        assert result.image == self.a
        assert result.label == SoftLabel.onehot(0, 2)

    def test_quarter_box(self):
        """測試 64² 影像、32×32 方框時 λ′ = 0.75"""
        result = cutmix(self.a, 0, self.b, 1, alpha=1.0, seed=1, num_classes=2, box=Box(40, 40, 72, 72))
        assert result.box == Box(40, 40, 64, 64)
        result = cutmix(self.a, 0, self.b, 1, alpha=1.0, seed=1, num_classes=2, box=Box(8, 16, 40, 48))
        assert result.lam == 0.75
        assert result.label.entries() == [(0, 0.75), (1, 0.25)]
        changed = np.any(result.image.pixels != self.a.pixels, axis=2)
        assert changed.sum() <= 32 * 32

    def test_replaced_pixels_equal_box_area(self):
        """測試 1000 次隨機試驗中與 a 不同的像素數恰為裁切後方框面積"""
        rng = np.random.default_rng(0)
        for trial in range(1000):
            height, width = int(rng.integers(4, 24)), int(rng.integers(4, 24))
            a = ImageBuffer(rng.uniform(0.0, 0.49, size=(height, width, 3)))
            b = ImageBuffer(rng.uniform(0.51, 1.0, size=(height, width, 3)))
            result = cutmix(a, 0, b, 1, alpha=1.0, seed=trial, num_classes=2)
            changed = int(np.any(result.image.pixels != a.pixels, axis=2).sum())
            assert changed == result.box.area
            assert result.lam == pytest.approx(1.0 - changed / (height * width), abs=1e-12)
            assert result.label.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_deterministic(self):
        first = cutmix(self.a, 0, self.b, 1, alpha=1.0, seed=5, num_classes=2)
        second = cutmix(self.a, 0, self.b, 1, alpha=1.0, seed=5, num_classes=2)
        assert first.box == second.box
        assert first.image == second.image


@pytest.mark.unit
@pytest.mark.augment
class TestSwitch:
    """CutMix / Mixup 切換測試"""

    def setup_method(self):
        self.a = ImageBuffer(image_helper.random_pixels(5, 8, 8))
        self.b = ImageBuffer(image_helper.random_pixels(6, 8, 8))

    def _branch(self, p, seed):
        return cutmix_mixup_switch(self.a, 0, self.b, 1, p_switch=p, alpha_cutmix=1.0, alpha_mixup=0.8,
                                   seed=seed, num_classes=2).branch

    def test_degenerate_probabilities(self):
        for seed in range(50):
            assert self._branch(0.0, seed) is MixBranch.MIXUP
            assert self._branch(1.0, seed) is MixBranch.CUTMIX

    def test_half_probability_rate(self):
        """測試 10,000 次抽樣中 cutmix 比例在 0.5 ± 0.02"""
        from augment.mixing import choose_branch
        draws = [choose_branch(seed, 0.5) for seed in range(10_000)]
        rate = sum(1 for branch in draws if branch is MixBranch.CUTMIX) / len(draws)
        assert abs(rate - 0.5) <= 0.02

    def test_branch_recorded(self):
        result = cutmix_mixup_switch(self.a, 0, self.b, 1, p_switch=1.0, alpha_cutmix=1.0, alpha_mixup=0.8,
                                     seed=4, num_classes=2)
        assert result.box is not None
        assert result.label.weights.sum() == pytest.approx(1.0)

    def test_invalid_probability(self):
        with pytest.raises(ValidationError) as exc_info:
            self._branch(1.5, 0)
        assert exc_info.value.field == "p_switch"
