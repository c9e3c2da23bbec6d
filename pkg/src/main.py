#!/usr/bin/env python3
"""
src 目錄內的入口點（python src/main.py 子命令 ...），行為與根目錄 main.py 相同
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli.interface import run


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
