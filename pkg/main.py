#!/usr/bin/env python3
"""
GenFormer 資料與穩健性基準工具主程式

使用方式：
1. 混合訓練資料：python main.py mix --real r.json --gen g.json --ratio 1.0 --seed 7 --out mix.json
2. 建立損壞測試集：python main.py corrupt --manifest test.json --profile natural --seed 1 --out test-C
3. 評估與比較：python main.py eval ... / python main.py delta --before a.json --after b.json

完整子命令請見 python main.py --help。
"""

import os
import sys

# 添加 src 目錄到 Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from cli.interface import run


def main() -> int:
    """
    主程式入口點

    Returns:
        程式退出碼（0 成功、1 使用方式錯誤、2 驗證失敗、3 IO 失敗）
    """
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
