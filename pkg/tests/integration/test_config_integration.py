"""
設定管理整合測試

測試設定檔、環境變數與命令列旗標在實際子命令中的優先順序，
以及日誌檔與輸出目錄設定
"""

import json

import pytest
import yaml

from cli.interface import EXIT_OK, EXIT_VALIDATION, run
from dataset.manifest import load_manifest, write_manifest
from tests.test_helpers import manifest_helper


@pytest.mark.integration
@pytest.mark.config
class TestConfigIntegration:
    """設定整合測試"""

    def setup_method(self):
        self.config_content = {
            "run": {"seed": 21, "threads": 2, "profile": "medical"},
            "paths": {"output": "runs"},
            "logging": {"level": "DEBUG", "file": "logs/genformer.log"},
        }

    def _setup(self, tmp_path, content=None):
        manifest = manifest_helper.build_manifest(tmp_path / "test", labels=[0, 1, 0, 1], size=16, name="test")
        manifest_path = write_manifest(manifest, tmp_path / "test.json")
        config_path = tmp_path / "genformer.yaml"
        config_path.write_text(yaml.safe_dump(content or self.config_content), encoding="utf-8")
        return manifest_path, config_path

    def _record(self, path):
        return json.loads((path.with_name(path.name + ".run.json")).read_text(encoding="utf-8"))

    def test_config_file_drives_corrupt(self, tmp_path):
        manifest_path, config_path = self._setup(tmp_path)

        assert run(["--config", str(config_path), "corrupt", "--manifest", str(manifest_path),
                    "--kinds", "contrast", "--out", "tree"]) == EXIT_OK

        out = tmp_path / "runs" / "tree"
        record = self._record(out)
        assert record["seed"] == 21
        assert record["parameters"]["profile"] == "medical"

        log_file = tmp_path / "logs" / "genformer.log"
        assert log_file.exists()
        assert "DEBUG" in log_file.read_text(encoding="utf-8")

    def test_environment_overrides_file(self, tmp_path, monkeypatch):
        manifest_path, config_path = self._setup(tmp_path)
        monkeypatch.setenv("GENFORMER_RUN_SEED", "99")
        monkeypatch.setenv("GENFORMER_RUN_PROFILE", "natural")

        assert run(["--config", str(config_path), "corrupt", "--manifest", str(manifest_path),
                    "--kinds", "fog", "--out", "tree"]) == EXIT_OK

        record = self._record(tmp_path / "runs" / "tree")
        assert record["seed"] == 99
        assert record["parameters"]["profile"] == "natural"

    def test_flags_override_environment(self, tmp_path, monkeypatch):
        manifest_path, config_path = self._setup(tmp_path)
        monkeypatch.setenv("GENFORMER_RUN_SEED", "99")
        out = tmp_path / "absolute-tree"

        assert run(["--config", str(config_path), "corrupt", "--manifest", str(manifest_path), "--seed", "5",
                    "--profile", "natural", "--kinds", "snow", "--out", str(out)]) == EXIT_OK

        record = self._record(out)
        assert record["seed"] == 5
        assert record["parameters"]["profile"] == "natural"
        assert not (tmp_path / "runs").exists()

    def test_same_seed_same_tree(self, tmp_path, monkeypatch):
        manifest_path, config_path = self._setup(tmp_path)
        assert run(["--config", str(config_path), "corrupt", "--manifest", str(manifest_path),
                    "--kinds", "gaussian_noise", "--out", "from-config"]) == EXIT_OK
        monkeypatch.setenv("GENFORMER_RUN_SEED", "21")
        assert run(["corrupt", "--manifest", str(manifest_path), "--profile", "medical",
                    "--kinds", "gaussian_noise", "--out", str(tmp_path / "from-env")]) == EXIT_OK

        assert self._record(tmp_path / "runs" / "from-config")["outputs"]["output"]["sha256"] == \
            self._record(tmp_path / "from-env")["outputs"]["output"]["sha256"]

    def test_params_override_from_config(self, tmp_path):
        override = {"version": "lab-2", "profiles": {"28": {"brightness": [{"shift": v} for v in
                                                                           (0.05, 0.1, 0.2, 0.3, 0.4)]}}}
        (tmp_path / "params.yaml").write_text(yaml.safe_dump(override), encoding="utf-8")
        content = dict(self.config_content, corruptions={"params": "params.yaml"})
        manifest_path, config_path = self._setup(tmp_path, content)

        assert run(["--config", str(config_path), "corrupt", "--manifest", str(manifest_path),
                    "--kinds", "brightness", "--out", "tree"]) == EXIT_OK

        record = self._record(tmp_path / "runs" / "tree")
        assert record["versions"]["severity_table"] == "lab-2"
        assert record["inputs"]["params"]["path"].endswith("params.yaml")

    def test_invalid_config_values(self, tmp_path):
        content = {"run": {"seed": -3}}
        manifest_path, config_path = self._setup(tmp_path, content)
        assert run(["--config", str(config_path), "stats", "--manifest", str(manifest_path)]) == EXIT_VALIDATION

    def test_missing_seed_everywhere(self, tmp_path):
        content = {"run": {"profile": "natural"}}
        manifest_path, config_path = self._setup(tmp_path, content)
        assert run(["--config", str(config_path), "subset", "--manifest", str(manifest_path), "--fraction", "0.5",
                    "--out", str(tmp_path / "s.json")]) == EXIT_VALIDATION

    def test_output_base_for_manifests(self, tmp_path):
        manifest_path, config_path = self._setup(tmp_path)
        assert run(["--config", str(config_path), "subset", "--manifest", str(manifest_path), "--fraction", "0.5",
                    "--out", "half.json"]) == EXIT_OK
        half = load_manifest(tmp_path / "runs" / "half.json", validate_images=True)
        assert len(half) == 2
