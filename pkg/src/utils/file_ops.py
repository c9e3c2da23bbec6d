"""
檔案操作工具模組

提供：
- 原子寫入（暫存檔 + rename）
- 內容雜湊（單檔 sha256、目錄樹摘要）
- 執行紀錄（run record）產生
"""

import os
import json
import hashlib
import tempfile
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_CHUNK_SIZE = 1024 * 1024


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """
    以原子方式寫入位元組內容

    先寫入同目錄的暫存檔，再以 os.replace 取代目標，
    讀者永遠不會看到寫到一半的檔案。

    Args:
        path: 目標檔案路徑
        data: 內容

    Returns:
        目標 Path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    """以 UTF-8 原子寫入文字內容"""
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: PathLike, payload: Any) -> Path:
    """以原子方式寫入 JSON 文件（indent 2、保留欄位順序、結尾換行）"""
    text = json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
    return atomic_write_text(path, text)


def sha256_file(path: PathLike) -> str:
    """計算檔案的 sha256 十六進位摘要"""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(_CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


def tree_digest(root: PathLike, exclude: Iterable[str] = ()) -> str:
    """
    計算目錄樹摘要

    依相對路徑排序後，將「相對路徑 + 檔案 sha256」依序餵入 sha256，
    與檔案寫入順序無關。

    Args:
        root: 目錄
        exclude: 排除的相對路徑（如執行紀錄本身）

    Returns:
        十六進位摘要
    """
    root_path = Path(root)
    excluded = set(exclude)
    digest = hashlib.sha256()
    files = sorted(p for p in root_path.rglob("*") if p.is_file())
    for file_path in files:
        rel = file_path.relative_to(root_path).as_posix()
        if rel in excluded:
            continue
        digest.update(rel.encode("utf-8"))
        digest.update(b"\0")
        digest.update(sha256_file(file_path).encode("ascii"))
        digest.update(b"\n")
    return digest.hexdigest()


def content_hash(path: PathLike, exclude: Iterable[str] = ()) -> str:
    """檔案回傳 sha256，目錄回傳樹摘要"""
    target = Path(path)
    if target.is_dir():
        return tree_digest(target, exclude=exclude)
    return sha256_file(target)


def build_run_record(command: str,
                     inputs: Dict[str, Optional[PathLike]],
                     outputs: Dict[str, PathLike],
                     seed: Optional[int],
                     parameters: Optional[Dict[str, Any]] = None,
                     versions: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """
    建立機器可讀的執行紀錄

    Args:
        command: 子命令名稱
        inputs: 輸入名稱 → 路徑（None 表示未提供）
        outputs: 輸出名稱 → 路徑
        seed: 使用的種子
        parameters: 其他參數
        versions: 版本資訊（工具、嚴重度參數表）

    Returns:
        可序列化為 JSON 的字典
    """
    def describe(path: PathLike) -> Dict[str, str]:
        target = Path(path)
        kind = "directory" if target.is_dir() else "file"
        return {"path": str(target), "kind": kind,
                "sha256": content_hash(target)}

    return {
        "command": command,
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": seed,
        "versions": dict(versions or {}),
        "parameters": dict(parameters or {}),
        "inputs": {name: describe(path) for name, path in inputs.items()
                   if path is not None and Path(path).exists()},
        "outputs": {name: describe(path) for name, path in outputs.items()},
    }


def run_record_path(output: PathLike) -> Path:
    """
    輸出對應的執行紀錄路徑：一律寫在輸出旁邊的 <name>.run.json

    目錄輸出的紀錄不放進目錄本身，同樣輸入與種子產生的目錄樹才能逐位元組相同。
    """
    target = Path(output)
    if not target.name:
        target = target.resolve()
    return target.with_name(target.name + ".run.json")


def write_run_record(output: PathLike, record: Dict[str, Any]) -> Path:
    """原子寫入執行紀錄並回傳其路徑"""
    path = run_record_path(output)
    atomic_write_json(path, record)
    logger.debug(f"執行紀錄已寫入: {path}")
    return path
