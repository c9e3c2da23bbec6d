"""
亂數種子工具模組

提供可重現的種子衍生與亂數產生器：
- hash64：由多個部件（種子、項目 ID、損壞類型、嚴重度）衍生 64 位元種子
- make_rng：以計數器式 Philox 產生器建立 numpy Generator

衍生規則固定為 BLAKE2b（8 位元組摘要、little-endian），
各部件以 UTF-8 編碼、以 0x1F 分隔，整數以十進位表示；
因此在任何平台、任何處理順序與執行緒數下結果一致。
"""

import hashlib
from typing import Union

import numpy as np


_SEPARATOR = b"\x1f"

SeedPart = Union[int, str]


def _encode_part(part: SeedPart) -> bytes:
    """將單一部件編碼為位元組"""
    if isinstance(part, bool):
        raise TypeError("種子部件不可為布林值")
    if isinstance(part, (int, np.integer)):
        return str(int(part)).encode("utf-8")
    if isinstance(part, str):
        return part.encode("utf-8")
    # Enum 之類的值以其 value 表示
    value = getattr(part, "value", None)
    if isinstance(value, (int, str)):
        return _encode_part(value)
    raise TypeError(f"不支援的種子部件型別: {type(part).__name__}")


def hash64(*parts: SeedPart) -> int:
    """
    由多個部件衍生 64 位元無號整數種子

    Args:
        *parts: 整數或字串部件（如 seed, item_id, kind, severity）

    Returns:
        [0, 2^64) 範圍內的整數

    Examples:
        >>> hash64(7, "img_001", "gaussian_noise", 3) == hash64(7, "img_001", "gaussian_noise", 3)
        True
    """
    payload = _SEPARATOR.join(_encode_part(part) for part in parts)
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> np.random.Generator:
    """
    建立計數器式亂數產生器

    Args:
        seed: 64 位元種子

    Returns:
        以 Philox(key=seed) 為核心的 numpy Generator
    """
    return np.random.Generator(np.random.Philox(key=int(seed)))
