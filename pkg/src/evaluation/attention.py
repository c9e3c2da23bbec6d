"""
注意力距離分析模組

讀寫注意力傾印目錄：

    <dump>/meta.json        layers, heads, T, R, C, P, cls_present, dtype ("f32le")
    <dump>/layer_<i>.bin    小端 32 位元浮點數，[head][query][key] 順序

mean_attention_distance 計算每層每個頭的平均注意力距離（像素）。
類別 token 沒有空間位置，其列與欄都不列入；每列在空間 key 上重新正規化。
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from evaluation.predictions import EvaluationError
from utils.file_ops import atomic_write_bytes, atomic_write_json


DUMP_DTYPE = "f32le"
META_FILE = "meta.json"
META_FIELDS = ["layers", "heads", "T", "R", "C", "P", "cls_present", "dtype"]

ROW_SUM_TOLERANCE = 1e-4


def layer_file(index: int) -> str:
    return f"layer_{index}.bin"


@dataclass
class AttentionDump:
    """
    一組注意力權重

    layers 中每一層為 (heads, T, T) 的列隨機矩陣；
    cls_present 時 token 0 為類別 token，T = R·C + 1，否則 T = R·C。
    """
    layers: List[np.ndarray]
    rows: int
    cols: int
    patch: int
    cls_present: bool

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def heads(self) -> int:
        return int(self.layers[0].shape[0]) if self.layers else 0

    @property
    def tokens(self) -> int:
        return self.rows * self.cols + (1 if self.cls_present else 0)

    def validate(self) -> None:
        """
        檢查幾何與權重

        Raises:
            EvaluationError: 層數為零、形狀與幾何不符、負權重、列和偏離 1 超過 1e-4
        """
        for name, value in (("R", self.rows), ("C", self.cols), ("P", self.patch)):
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise EvaluationError(f"注意力幾何 {name} 必須是正整數: {value!r}", field=name, value=value)
        if not self.layers:
            raise EvaluationError("注意力傾印沒有任何層", field="layers", value=0)

        expected = (self.heads, self.tokens, self.tokens)
        for index, layer in enumerate(self.layers):
            if layer.shape != expected:
                raise EvaluationError(
                    f"第 {index} 層形狀 {layer.shape} 與幾何不符（預期 {expected}，"
                    f"R={self.rows} C={self.cols} cls={self.cls_present}）",
                    field="T", value=list(layer.shape))
            if not np.isfinite(layer).all() or (layer < 0).any():
                raise EvaluationError(f"第 {index} 層含有負值或非數值權重", field=layer_file(index))
            deviation = float(np.abs(layer.sum(axis=2) - 1.0).max())
            if deviation > ROW_SUM_TOLERANCE:
                raise EvaluationError(f"第 {index} 層不是列隨機矩陣（列和最大偏差 {deviation:.2e}）",
                                      field=layer_file(index), value=deviation)

    def meta(self) -> dict:
        return {"layers": self.num_layers, "heads": self.heads, "T": self.tokens, "R": self.rows,
                "C": self.cols, "P": self.patch, "cls_present": self.cls_present, "dtype": DUMP_DTYPE}


def load_attention_dump(directory: Union[str, Path]) -> AttentionDump:
    """
    讀取並驗證注意力傾印目錄

    Raises:
        FileNotFoundError: 目錄、meta.json 或層檔不存在
        EvaluationError: meta 欄位錯誤、檔案大小不符、權重不合法
    """
    directory = Path(directory)
    meta_path = directory / META_FILE
    if not meta_path.is_file():
        raise FileNotFoundError(f"找不到注意力傾印描述檔: {meta_path}")
    try:
        with open(meta_path, "r", encoding="utf-8") as f:
            meta = json.load(f)
    except json.JSONDecodeError as e:
        raise EvaluationError(f"注意力傾印描述檔解析失敗: {meta_path} ({e})", field="meta", value=str(meta_path))

    missing = [name for name in META_FIELDS if name not in meta]
    if missing:
        raise EvaluationError(f"注意力傾印描述檔缺少欄位: {', '.join(missing)}", field=missing[0])
    if meta["dtype"] != DUMP_DTYPE:
        raise EvaluationError(f"不支援的注意力資料型別: {meta['dtype']}（僅支援 {DUMP_DTYPE}）",
                              field="dtype", value=meta["dtype"])

    layers_count, heads, tokens = int(meta["layers"]), int(meta["heads"]), int(meta["T"])
    cls_present = bool(meta["cls_present"])
    rows, cols, patch = int(meta["R"]), int(meta["C"]), int(meta["P"])
    if tokens != rows * cols + (1 if cls_present else 0):
        raise EvaluationError(f"T={tokens} 與幾何 R={rows} C={cols} cls={cls_present} 不符",
                              field="T", value=tokens)

    expected_bytes = heads * tokens * tokens * 4
    layers = []
    for index in range(layers_count):
        path = directory / layer_file(index)
        if not path.is_file():
            raise FileNotFoundError(f"找不到注意力層檔: {path}")
        size = path.stat().st_size
        if size != expected_bytes:
            raise EvaluationError(f"注意力層檔大小 {size} 與預期 {expected_bytes} 位元組不符: {path}",
                                  field=layer_file(index), value=size)
        raw = np.fromfile(path, dtype="<f4")
        layers.append(raw.reshape(heads, tokens, tokens).astype(np.float64))

    dump = AttentionDump(layers, rows, cols, patch, cls_present)
    dump.validate()
    logging.getLogger(__name__).debug(f"讀取注意力傾印 {directory}: {layers_count} 層 × {heads} 頭，T={tokens}")
    return dump


def write_attention_dump(dump: AttentionDump, directory: Union[str, Path]) -> Path:
    """寫入注意力傾印目錄（權重轉為小端 32 位元浮點數）"""
    dump.validate()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index, layer in enumerate(dump.layers):
        atomic_write_bytes(directory / layer_file(index), np.asarray(layer, dtype="<f4").tobytes())
    atomic_write_json(directory / META_FILE, dump.meta())
    return directory


@dataclass(frozen=True)
class AttentionDistances:
    """每層每個頭的平均注意力距離（像素），形狀 (layers, heads)"""
    per_head: np.ndarray
    patch: int

    @property
    def per_layer(self) -> np.ndarray:
        """每層各頭的平均（忽略未定義的頭）"""
        return np.array([np.nanmean(row) if not np.isnan(row).all() else np.nan for row in self.per_head])

    def to_rows(self) -> List[dict]:
        rows = []
        for layer, values in enumerate(self.per_head):
            for head, value in enumerate(values):
                rows.append({"layer": layer, "head": head, "distance": float(value)})
        return rows


def patch_distances(rows: int, cols: int, patch: int) -> np.ndarray:
    """空間 token 兩兩之間的距離（像素），形狀 (R·C, R·C)，token 依列優先排列"""
    grid_rows, grid_cols = np.divmod(np.arange(rows * cols), cols)
    dr = grid_rows[:, None] - grid_rows[None, :]
    dc = grid_cols[:, None] - grid_cols[None, :]
    return patch * np.sqrt(dr ** 2 + dc ** 2)


def max_attention_distance(rows: int, cols: int, patch: int) -> float:
    return patch * math.sqrt((rows - 1) ** 2 + (cols - 1) ** 2)


def mean_attention_distance(dump: AttentionDump) -> AttentionDistances:
    """
    計算平均注意力距離

    每個空間 query 的距離 = Σ_k A[q,k]·d(q,k) / Σ_k A[q,k]（k 只含空間 token），
    每個頭的距離為空間 query 的平均。空間總權重為零的 query（全部注意類別 token）略過並警告；
    整個頭都沒有可用 query 時該頭為 NaN。

    Returns:
        AttentionDistances
    """
    logger = logging.getLogger(f"{__name__}.mean_attention_distance")
    dump.validate()
    offset = 1 if dump.cls_present else 0
    distances = patch_distances(dump.rows, dump.cols, dump.patch)

    per_head = np.empty((dump.num_layers, dump.heads))
    skipped = 0
    for index, layer in enumerate(dump.layers):
        spatial = layer[:, offset:, offset:]
        mass = spatial.sum(axis=2)
        weighted = (spatial * distances[None, :, :]).sum(axis=2)
        valid = mass > 0.0
        skipped += int((~valid).sum())
        per_query = np.divide(weighted, mass, out=np.zeros_like(weighted), where=valid)
        counts = valid.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            per_head[index] = np.where(counts > 0, per_query.sum(axis=1) / counts, np.nan)

    if skipped:
        logger.warning(f"{skipped} 個 query 的空間注意力總和為零，已略過")
    return AttentionDistances(per_head, dump.patch)


def average_attention_distances(dumps: Sequence[AttentionDump]) -> AttentionDistances:
    """
    對一組探測影像的傾印取平均（逐層逐頭）

    Raises:
        EvaluationError: 沒有傾印，或傾印的層數、頭數、patch 大小不同
    """
    if not dumps:
        raise EvaluationError("沒有可平均的注意力傾印", field="dumps", value=0)
    results = [mean_attention_distance(dump) for dump in dumps]
    shape, patch = results[0].per_head.shape, results[0].patch
    for position, result in enumerate(results[1:], start=1):
        if result.per_head.shape != shape or result.patch != patch:
            raise EvaluationError(f"第 {position} 個傾印的層數、頭數或 patch 大小與第一個不同",
                                  field="dumps", value=position)
    stacked = np.stack([result.per_head for result in results])
    return AttentionDistances(stacked.mean(axis=0), patch)
