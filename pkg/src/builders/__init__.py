"""
偏移測試集建構套件

- intersection：類別交集（-V2 / -R）
- adversarial_filter：誤分類篩選（-A）
"""
