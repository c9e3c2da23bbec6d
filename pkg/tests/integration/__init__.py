"""
整合測試套件

包含跨模組的整合測試
"""