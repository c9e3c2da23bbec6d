"""
評估套件

預測檔讀取、乾淨錯誤率、損壞錯誤矩陣與 mCE、評估報告與差值報告、
注意力距離分析
"""
