"""
CLI 介面整合測試

測試子命令之間以檔案串接的流程：
- 類別交集測試集 → 損壞測試集
- 誤分類篩選測試集
- 離線增強後的統計
- 多個注意力傾印的平均
"""

import json

import numpy as np
import pytest

from augment.offline import parse_soft_labels
from cli.interface import EXIT_OK, EXIT_VALIDATION, run
from corruptions.builder import load_corrupted_tree
from dataset.manifest import load_manifest, write_manifest
from tests.test_helpers import attention_helper, image_helper, manifest_helper, prediction_helper


@pytest.mark.integration
@pytest.mark.cli
class TestShiftedTestsetFlow:
    """偏移測試集建構流程"""

    def test_intersection_then_corrupt(self, tmp_path):
        image_helper.write_class_tree(tmp_path / "imagenet-r", {"n01": 4, "n02": 3, "n03": 2, "n09": 5}, size=24)
        target = manifest_helper.build_manifest(tmp_path / "target", labels=[0, 1, 2], keys=("n03", "n01", "n07"),
                                                size=16, name="target")
        target_path = write_manifest(target, tmp_path / "target.json")
        built_dir = tmp_path / "target-R"

        assert run(["build-v2", "--source", str(tmp_path / "imagenet-r"), "--target", str(target_path),
                    "--threads", "2", "--out", str(built_dir)]) == EXIT_OK

        built = load_manifest(built_dir / "manifest.json", validate_images=True)
        assert built.class_counts() == [2, 4, 0]
        assert [cls.key for cls in built.label_space] == ["n03", "n01", "n07"]
        classes = json.loads((built_dir / "classes.json").read_text(encoding="utf-8"))
        assert classes["source_classes"] == 4
        assert {entry["key"] for entry in classes["mapping"]} == {"n01", "n03"}

        tree_dir = tmp_path / "target-R-C"
        assert run(["corrupt", "--manifest", str(built_dir / "manifest.json"), "--profile", "medical",
                    "--seed", "8", "--kinds", "gaussian_noise,pixelate", "--out", str(tree_dir)]) == EXIT_OK
        tree = load_corrupted_tree(tree_dir)
        assert [kind.value for kind in tree.kinds] == ["gaussian_noise", "pixelate"]
        assert tree.item_count == 6
        cell = load_manifest(tree_dir / "pixelate" / "5" / "manifest.json", validate_images=True)
        assert cell.item_ids() == built.item_ids()

    def test_adversarial_filter(self, tmp_path):
        val = manifest_helper.build_manifest(tmp_path / "val", labels=[0, 1, 2] * 4, keys=("a", "b", "c"),
                                             size=16, name="val")
        val_path = write_manifest(val, tmp_path / "val.json")
        wrong = [item.id for item in val.items if item.label == 2] + [val.items[0].id]
        preds = prediction_helper.write_for_manifest(tmp_path / "resnet50.csv", val, wrong=wrong)
        out = tmp_path / "val-A"

        assert run(["build-a", "--val", str(val_path), "--predictions", str(preds), "--out", str(out)]) == EXIT_OK

        filtered = load_manifest(out / "manifest.json", validate_images=True)
        assert len(filtered) == 5
        assert filtered.class_counts() == [1, 0, 4]
        originals = {item.id: item for item in val.items}
        for item in filtered.items:
            assert (out / item.path).read_bytes() == val.resolve(originals[item.id]).read_bytes()


@pytest.mark.integration
@pytest.mark.cli
class TestAugmentFlow:
    """離線增強流程"""

    @pytest.mark.parametrize("op", ["cutmix", "augmix"])
    def test_augment_then_stats(self, tmp_path, op):
        train = manifest_helper.build_manifest(tmp_path / "train", labels=[0, 1, 2, 0, 1, 2], keys=("a", "b", "c"),
                                               size=16, name="train")
        train_path = write_manifest(train, tmp_path / "train.json")
        out = tmp_path / f"train-{op}"

        assert run(["augment", "--manifest", str(train_path), "--op", op, "--seed", "17", "--threads", "2",
                    "--out", str(out)]) == EXIT_OK
        assert run(["stats", "--manifest", str(out / "manifest.json"), "--out", str(out / "stats.json")]) == EXIT_OK

        augmented = load_manifest(out / "manifest.json", validate_images=True)
        soft = parse_soft_labels((out / "soft_labels.tsv").read_text(encoding="utf-8"), augmented.num_classes)
        assert set(soft) == set(augmented.item_ids())
        for label in soft.values():
            assert sum(label.weights) == pytest.approx(1.0)
        stats = json.loads((out / "stats.json").read_text(encoding="utf-8"))
        assert all(0.0 <= value <= 1.0 for value in stats["mean"])

    def test_augment_reproducible(self, tmp_path):
        train = manifest_helper.build_manifest(tmp_path / "train", labels=[0, 1] * 3, size=16, name="train")
        train_path = write_manifest(train, tmp_path / "train.json")
        for name in ("a", "b"):
            assert run(["augment", "--manifest", str(train_path), "--op", "switch", "--seed", "5",
                        "--out", str(tmp_path / name)]) == EXIT_OK
        first = json.loads((tmp_path / "a.run.json").read_text(encoding="utf-8"))
        second = json.loads((tmp_path / "b.run.json").read_text(encoding="utf-8"))
        assert first["outputs"]["output"]["sha256"] == second["outputs"]["output"]["sha256"]


@pytest.mark.integration
@pytest.mark.cli
class TestAttentionFlow:
    """注意力距離流程"""

    def test_average_over_several_dumps(self, tmp_path, capsys):
        first = attention_helper.write_dump(tmp_path / "dump-0", attention_helper.identity(2, 2, 5),
                                            rows=2, cols=2, patch=16, cls_present=True)
        second = attention_helper.write_dump(tmp_path / "dump-1", attention_helper.uniform(2, 2, 5),
                                             rows=2, cols=2, patch=16, cls_present=True)
        out = tmp_path / "distances.csv"

        assert run(["attn-dist", "--dump", str(first), "--dump", str(second), "--out", str(out)]) == EXIT_OK

        lines = capsys.readouterr().out.splitlines()
        # 單位矩陣距離為 0；均勻注意力在 2×2 網格上為 (0 + 16 + 16 + 16√2) / 4
        expected = (0.0 + (32 + 16 * np.sqrt(2)) / 4) / 2
        assert f"layer 0: {expected:.1f}" in lines
        record = json.loads((tmp_path / "distances.csv.run.json").read_text(encoding="utf-8"))
        assert set(record["inputs"]) == {"dump.0", "dump.1"}

    def test_mismatched_dumps(self, tmp_path):
        first = attention_helper.write_dump(tmp_path / "a", attention_helper.uniform(2, 2, 4),
                                            rows=2, cols=2, patch=16, cls_present=False)
        second = attention_helper.write_dump(tmp_path / "b", attention_helper.uniform(3, 2, 4),
                                             rows=2, cols=2, patch=16, cls_present=False)
        assert run(["attn-dist", "--dump", str(first), "--dump", str(second)]) == EXIT_VALIDATION
