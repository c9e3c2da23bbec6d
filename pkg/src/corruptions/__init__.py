"""
常見損壞模組

提供 15 種損壞核心（5 個嚴重度）、版本化的嚴重度參數表，
以及建立損壞測試集目錄樹（natural / medical 設定檔）的建構器
"""
