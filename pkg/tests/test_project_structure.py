"""
專案結構完整性測試

驗證專案目錄結構和基礎檔案是否正確建立
"""

import pytest


class TestProjectStructure:
    """專案結構測試類別"""

    def test_project_directories_exist(self, project_root_path):
        """測試專案目錄是否存在"""
        required_dirs = [
            "src",
            "src/cli",
            "src/config",
            "src/dataset",
            "src/corruptions",
            "src/builders",
            "src/augment",
            "src/evaluation",
            "src/utils",
            "tests",
            "tests/unit",
            "tests/integration",
            "config",
            "docs",
        ]

        for dir_name in required_dirs:
            dir_path = project_root_path / dir_name
            assert dir_path.is_dir(), f"目錄 {dir_name} 不存在"

    def test_init_files_exist(self, project_root_path):
        """測試 __init__.py 檔案是否存在"""
        packages = ["src", "src/cli", "src/config", "src/dataset", "src/corruptions", "src/builders",
                    "src/augment", "src/evaluation", "src/utils", "tests", "tests/unit", "tests/integration"]

        for package in packages:
            init_file = project_root_path / package / "__init__.py"
            assert init_file.is_file(), f"初始化檔案 {package}/__init__.py 不存在"

    def test_config_files_exist(self, project_root_path):
        """測試設定檔案是否存在"""
        for name in ["requirements.txt", "pytest.ini", "README.md", "main.py", "run.sh",
                     "config/quick-start.yaml", "docs/CONFIG.md"]:
            assert (project_root_path / name).is_file(), f"設定檔案 {name} 不存在"

    def test_severity_table_shipped(self, project_root_path):
        """嚴重度參數表隨套件發佈"""
        table = project_root_path / "src" / "corruptions" / "severity_params.yaml"
        assert table.is_file()
        assert table.stat().st_size > 0

    @pytest.mark.parametrize("package", ["click", "PyYAML", "colorama", "numpy", "Pillow", "scipy", "pandas",
                                         "pytest"])
    def test_requirements_content(self, project_root_path, package):
        """requirements.txt 列出所有依賴套件"""
        content = (project_root_path / "requirements.txt").read_text(encoding="utf-8")
        names = {line.split(">=")[0].split("==")[0].strip().lower()
                 for line in content.splitlines() if line.strip() and not line.startswith("#")}
        assert package.lower() in names
