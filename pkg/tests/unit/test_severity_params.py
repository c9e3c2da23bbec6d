"""
嚴重度參數表測試
"""

import pytest
import yaml

from corruptions.kinds import ALL_KINDS, CorruptionError, CorruptionKind
from corruptions.params import (DEFAULT_PARAMS_PATH, RESOLUTION_PROFILES, load_severity_table,
                                resolution_profile)
from dataset.image_io import ImageGeometry


@pytest.mark.unit
@pytest.mark.corruptions
class TestSeverityTable:
    """嚴重度參數表測試"""

    def setup_method(self):
        self.table = load_severity_table()

    @pytest.mark.parametrize("width,height,expected", [
        (28, 28, "28"), (16, 20, "28"), (32, 32, "32"), (29, 10, "32"), (33, 33, "64"), (64, 64, "64"),
        (224, 224, "64"), (20, 48, "64"),
    ])
    def test_resolution_profile(self, width, height, expected):
        """測試依 max(寬, 高) 選擇設定檔"""
        assert resolution_profile(width, height) == expected

    def test_small_profiles_share_table(self):
        """測試 28² 與 32² 使用同一張表"""
        for kind in ALL_KINDS:
            for severity in range(1, 6):
                assert self.table.params_for(kind, severity, "28") == self.table.params_for(kind, severity, "32")

    def test_shipped_values(self):
        """測試附帶表中的代表性數值"""
        assert self.table.params_for("gaussian_noise", 1, "32") == {"sigma": 0.04}
        assert self.table.params_for("gaussian_noise", 5, "64") == {"sigma": 0.18}
        assert self.table.params_for("jpeg_compression", 5, "64") == {"quality": 25}
        assert self.table.params_for("contrast", 1, "32") == {"factor": 0.75}
        geometry = ImageGeometry(64, 64, 3)
        assert self.table.params_for_geometry(CorruptionKind.SHOT_NOISE, 2, geometry) == {"photons": 100}

    def test_primary_parameters_monotone(self):
        """測試每種損壞的主要參數隨嚴重度單調"""
        for profile in RESOLUTION_PROFILES:
            for kind in ALL_KINDS:
                values = self.table.primary_values(kind, profile)
                direction = self.table.primary[kind.value]["direction"]
                pairs = list(zip(values, values[1:]))
                if direction == "increasing":
                    assert all(a <= b for a, b in pairs), (kind, profile, values)
                else:
                    assert all(a >= b for a, b in pairs), (kind, profile, values)

    def test_adjusted_kinds_move_together(self):
        """測試 glass_blur 與 elastic_transform 的每個參數都不逆向"""
        for profile in ("32", "64"):
            for kind in ("glass_blur", "elastic_transform"):
                levels = [self.table.params_for(kind, s, profile) for s in range(1, 6)]
                for name in levels[0]:
                    values = [level[name] for level in levels]
                    assert values == sorted(values), (kind, profile, name, values)

    def test_params_are_copies(self):
        params = self.table.params_for("fog", 1, "32")
        params["strength"] = 99
        assert self.table.params_for("fog", 1, "32")["strength"] == 0.2

    def test_unknown_profile(self):
        with pytest.raises(CorruptionError):
            self.table.params_for("fog", 1, "128")

    def test_version_recorded(self):
        with open(DEFAULT_PARAMS_PATH, "r", encoding="utf-8") as f:
            shipped = yaml.safe_load(f)
        assert self.table.version == str(shipped["version"])


@pytest.mark.unit
@pytest.mark.corruptions
class TestSeverityOverride:
    """參數覆寫測試"""

    def test_override_replaces_kind(self, tmp_path):
        """測試覆寫檔取代整組嚴重度並標記版本"""
        path = tmp_path / "params.yaml"
        path.write_text(yaml.safe_dump({"profiles": {"64": {"gaussian_noise": [
            {"sigma": 0.01}, {"sigma": 0.02}, {"sigma": 0.03}, {"sigma": 0.04}, {"sigma": 0.05}]}}}),
            encoding="utf-8")

        table = load_severity_table(path)

        assert table.params_for("gaussian_noise", 3, "64") == {"sigma": 0.03}
        assert table.params_for("gaussian_noise", 3, "32") == {"sigma": 0.08}
        assert table.params_for("fog", 1, "64") == {"strength": 0.4, "wibble_decay": 3.0}
        assert table.version.endswith("+custom")

    def test_override_version(self, tmp_path):
        path = tmp_path / "params.yaml"
        path.write_text("version: lab-7\n", encoding="utf-8")
        assert load_severity_table(path).version == "lab-7"

    def test_non_monotone_override_rejected(self, tmp_path):
        """測試主要參數未單調時拒絕載入"""
        path = tmp_path / "params.yaml"
        path.write_text(yaml.safe_dump({"profiles": {"32": {"jpeg_compression": [
            {"quality": 80}, {"quality": 90}, {"quality": 58}, {"quality": 50}, {"quality": 40}]}}}),
            encoding="utf-8")
        with pytest.raises(CorruptionError) as exc_info:
            load_severity_table(path)
        assert exc_info.value.field == "profiles.32.jpeg_compression"

    def test_wrong_level_count(self, tmp_path):
        path = tmp_path / "params.yaml"
        path.write_text(yaml.safe_dump({"profiles": {"64": {"fog": [{"strength": 1, "wibble_decay": 2}]}}}),
                        encoding="utf-8")
        with pytest.raises(CorruptionError):
            load_severity_table(path)

    def test_unknown_kind_in_override(self, tmp_path):
        path = tmp_path / "params.yaml"
        path.write_text(yaml.safe_dump({"profiles": {"64": {"rain": []}}}), encoding="utf-8")
        with pytest.raises(CorruptionError) as exc_info:
            load_severity_table(path)
        assert exc_info.value.field == "kind"

    def test_missing_override_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_severity_table(tmp_path / "absent.yaml")

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "params.yaml"
        path.write_text("profiles: [unclosed\n", encoding="utf-8")
        with pytest.raises(CorruptionError):
            load_severity_table(path)
