"""
pytest 全域設定檔

提供共用的測試設定和 fixture
"""

import pytest
import os
import sys
from pathlib import Path

# 將 src 目錄加入 Python 路徑
project_root = Path(__file__).parent.parent
src_path = project_root / "src"
sys.path.insert(0, str(src_path))

# 匯入測試輔助工具
from tests.test_helpers import image_helper, manifest_helper, prediction_helper, attention_helper
from utils.logger import cleanup_loggers


@pytest.fixture
def project_root_path():
    """提供專案根目錄路徑"""
    return project_root


@pytest.fixture(autouse=True)
def setup_test_environment(monkeypatch):
    """自動設定測試環境：清除可能影響設定的 GENFORMER_ 環境變數"""
    for key in list(os.environ):
        if key.startswith("GENFORMER_"):
            monkeypatch.delenv(key, raising=False)
    yield
    cleanup_loggers()


@pytest.fixture
def images():
    """提供影像測試輔助工具"""
    return image_helper


@pytest.fixture
def manifests():
    """提供清單測試輔助工具"""
    return manifest_helper


@pytest.fixture
def predictions():
    """提供預測檔測試輔助工具"""
    return prediction_helper


@pytest.fixture
def attention():
    """提供注意力傾印測試輔助工具"""
    return attention_helper


@pytest.fixture
def small_manifest(tmp_path):
    """10 項、兩個類別、32×32 RGB 的真實資料清單"""
    return manifest_helper.build_manifest(tmp_path / "small", labels=[0, 1] * 5, keys=("a", "b"))
