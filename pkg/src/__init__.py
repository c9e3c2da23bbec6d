"""
GenFormer 資料與穩健性基準工具

將真實與生成影像組成訓練清單，建立損壞及偏移測試集，
並計算 clean error、mCE、改善幅度與平均注意力距離。
"""

from utils.version import __version__, TOOL_NAME

__author__ = "Developer"
__description__ = "GenFormer 資料管線與穩健性基準工具"
