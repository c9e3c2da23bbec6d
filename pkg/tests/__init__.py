"""
測試套件

包含單元測試、整合測試和測試資料
"""