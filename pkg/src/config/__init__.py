"""
設定管理模組
"""
