"""
版本資訊模組
"""

__version__ = "0.3.0"

TOOL_NAME = "genformer-toolkit"
