"""
資料集核心模組

提供資料集清單模型、影像讀寫、通道統計、分層子集抽樣、
生成影像匯入以及真實／生成資料混合等功能
"""
