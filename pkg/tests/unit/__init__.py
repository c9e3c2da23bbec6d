"""
單元測試套件

包含各個模組的單元測試
"""