"""
資料增強套件

- mixing：SoftLabel、mixup、cutmix、cutmix/mixup 切換
- augmix：AugMix 增強鏈
- offline：對整份清單離線套用增強並寫出軟標籤檔
"""
