"""
CLI 介面模組

以 click 命令群組提供所有子命令
"""
