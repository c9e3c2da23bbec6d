"""
影像匯入模組測試
"""

import pytest

from dataset.image_io import ImageDecodeError, ImageGeometry
from dataset.ingest import ingest_generated, item_id_for, manifest_from_class_tree, read_label_map
from dataset.manifest import ItemSource, ManifestError
from utils.validators import ValidationError


@pytest.mark.unit
@pytest.mark.dataset
class TestIngestGenerated:
    """生成影像匯入測試"""

    def setup_method(self):
        from tests.test_helpers import manifest_helper
        self.label_space = manifest_helper.label_space(["cat", "dog", "owl"])

    def test_class_subdirectories(self, tmp_path, images):
        """測試以類別子目錄指派標籤"""
        images.write_class_tree(tmp_path / "gen", {"cat": 3, "owl": 2}, size=16)

        manifest = ingest_generated(tmp_path / "gen", self.label_space, provenance="edm")

        assert manifest.n_gen == 5
        assert manifest.n_real == 0
        assert manifest.class_counts() == [3, 0, 2]
        assert manifest.geometry == ImageGeometry(16, 16, 3)
        assert all(item.source is ItemSource.GENERATED for item in manifest.items)
        assert all(item.provenance == "edm" for item in manifest.items)
        assert manifest.item_ids()[0] == "cat-0000"

    def test_unknown_key_rejects_whole_ingest(self, tmp_path, images):
        """測試不在目標標籤空間的類別鍵拒絕整批匯入並指出該鍵"""
        images.write_class_tree(tmp_path / "gen", {"cat": 2, "zebra": 1}, size=8)

        with pytest.raises(ManifestError) as exc_info:
            ingest_generated(tmp_path / "gen", self.label_space)
        assert "zebra" in str(exc_info.value)
        assert exc_info.value.value == ["zebra"]

    def test_empty_directory_warns(self, tmp_path, caplog):
        """測試空目錄產生 N_gen=0 的清單並發出警告"""
        (tmp_path / "gen").mkdir()
        with caplog.at_level("WARNING"):
            manifest = ingest_generated(tmp_path / "gen", self.label_space)
        assert len(manifest) == 0
        assert manifest.num_classes == 3
        assert any(record.levelname == "WARNING" for record in caplog.records)

    def test_label_map(self, tmp_path, images):
        """測試以標籤對照檔指派標籤"""
        root = tmp_path / "flat"
        images.write_png(root / "s1" / "x.png", images.random_pixels(0, 8, 8))
        images.write_png(root / "y.png", images.random_pixels(1, 8, 8))
        label_map = tmp_path / "labels.tsv"
        label_map.write_text("s1/x.png\tdog\ny.png\towl\n", encoding="utf-8")

        manifest = ingest_generated(root, self.label_space, label_map=label_map)

        assert manifest.item_ids() == ["s1-x", "y"]
        assert [item.label for item in manifest.items] == [1, 2]

    def test_label_map_must_cover_every_image(self, tmp_path, images):
        """測試對照檔未涵蓋的影像視為未指派標籤"""
        root = tmp_path / "flat"
        images.write_png(root / "a.png", images.random_pixels(0, 8, 8))
        images.write_png(root / "b.png", images.random_pixels(1, 8, 8))
        label_map = tmp_path / "labels.tsv"
        label_map.write_text("a.png\tcat\n", encoding="utf-8")

        with pytest.raises(ManifestError) as exc_info:
            ingest_generated(root, self.label_space, label_map=label_map)
        assert exc_info.value.value == "b.png"

    def test_stray_image_outside_class_dirs(self, tmp_path, images):
        """測試類別子目錄模式下根目錄的散落影像"""
        images.write_class_tree(tmp_path / "gen", {"cat": 1}, size=8)
        images.write_png(tmp_path / "gen" / "loose.png", images.random_pixels(0, 8, 8))
        with pytest.raises(ManifestError):
            ingest_generated(tmp_path / "gen", self.label_space)

    def test_undecodable_image(self, tmp_path, images):
        """測試無法解碼的影像"""
        images.write_class_tree(tmp_path / "gen", {"cat": 1}, size=8)
        (tmp_path / "gen" / "dog").mkdir()
        (tmp_path / "gen" / "dog" / "broken.png").write_bytes(b"\x89PNG broken")
        with pytest.raises(ImageDecodeError):
            ingest_generated(tmp_path / "gen", self.label_space)

    def test_missing_directory(self, tmp_path):
        """測試目錄不存在"""
        with pytest.raises(ValidationError) as exc_info:
            ingest_generated(tmp_path / "absent", self.label_space)
        assert exc_info.value.field == "image_dir"

    def test_malformed_label_map_line(self, tmp_path):
        """測試對照檔格式錯誤的行"""
        path = tmp_path / "labels.tsv"
        path.write_text("a.png cat\n", encoding="utf-8")
        with pytest.raises(ManifestError):
            read_label_map(path)

    def test_label_map_path_outside_image_dir(self, tmp_path, images):
        """測試對照檔中以 .. 指向影像目錄之外的路徑"""
        root = tmp_path / "generated"
        images.write_png(root / "a.png", images.random_pixels(1, 8, 8))
        images.write_png(tmp_path / "outside.png", images.random_pixels(2, 8, 8))
        label_map = tmp_path / "labels.tsv"
        label_map.write_text("a.png\tcat\n../outside.png\tdog\n", encoding="utf-8")

        with pytest.raises(ManifestError) as exc_info:
            ingest_generated(root, self.label_space, label_map=label_map)
        assert exc_info.value.field == "label_map"
        assert exc_info.value.value == 2


@pytest.mark.unit
@pytest.mark.dataset
class TestManifestFromClassTree:
    """由類別目錄建立清單測試"""

    def test_derives_label_space_from_directories(self, tmp_path, images):
        """測試未提供標籤空間時以排序後的目錄名稱建立"""
        images.write_class_tree(tmp_path / "src", {"n02": 2, "n01": 1}, size=8)

        manifest = manifest_from_class_tree(tmp_path / "src", provenance="matched-frequency")

        assert manifest.label_keys() == ["n01", "n02"]
        assert manifest.class_counts() == [1, 2]
        assert manifest.n_real == 3
        assert manifest.items[0].provenance == "matched-frequency"

    def test_heterogeneous_sizes_have_no_geometry(self, tmp_path, images):
        """測試尺寸不一致的來源不記錄 geometry"""
        images.write_png(tmp_path / "src" / "a" / "1.png", images.random_pixels(0, 8, 8))
        images.write_png(tmp_path / "src" / "a" / "2.png", images.random_pixels(1, 9, 8))
        manifest = manifest_from_class_tree(tmp_path / "src")
        assert manifest.geometry is None

    def test_unknown_directory_with_label_space(self, tmp_path, images, manifests):
        """測試目錄名稱不在提供的標籤空間中"""
        images.write_class_tree(tmp_path / "src", {"a": 1, "q": 1}, size=8)
        with pytest.raises(ManifestError):
            manifest_from_class_tree(tmp_path / "src", label_space=manifests.label_space(["a", "b"]))

    def test_item_id_for(self):
        """測試項目 ID 由相對路徑產生"""
        assert item_id_for("n01/img_3.JPEG") == "n01-img_3"
        assert item_id_for("x.png") == "x"
