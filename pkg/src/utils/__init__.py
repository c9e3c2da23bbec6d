"""
工具函數模組

提供日誌管理、資料驗證、種子衍生與原子寫入／執行紀錄等輔助功能
"""