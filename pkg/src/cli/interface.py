"""
CLI 介面模組

以 click 命令群組串接所有模組：

    genformer [--config FILE] [--log-level LEVEL] <子命令> ...

每個子命令對應一個模組操作；所有輸出以原子方式寫入，並附帶執行紀錄
（寫在輸出旁邊的 <輸出名稱>.run.json，目錄樹本身不含紀錄）。

結束碼：0 成功、1 使用方式錯誤、2 驗證或前置條件失敗、3 IO 失敗。
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import click
import pandas as pd
from colorama import Fore, Style

from augment.augmix import AugmixConfig
from augment.offline import AugmentOp, MixConfig, augment_manifest
from builders.adversarial_filter import build_adversarial_filter_testset
from builders.intersection import build_intersection_testset, intersect_classes
from config.config_manager import ToolConfig, load_tool_config
from corruptions.builder import build_corrupted_testset, load_corrupted_tree
from corruptions.params import default_severity_table, load_severity_table
from dataset.image_io import ImageGeometry, decode_image
from dataset.ingest import ingest_generated, manifest_from_class_tree
from dataset.manifest import DatasetManifest, load_label_space, load_manifest, write_manifest
from dataset.sampling import mix_datasets, stratified_subset
from dataset.statistics import compute_channel_stats
from evaluation.attention import average_attention_distances, load_attention_dump
from evaluation.metrics import (clean_error, corruption_error_matrix, load_matrix_csv, load_tree_predictions,
                                mce, write_matrix_csv)
from evaluation.predictions import load_predictions
from evaluation.report import (benchmark_table, build_eval_report, delta_report, format_value, load_report,
                               write_report, write_table_csv)
from utils.file_ops import atomic_write_json, atomic_write_text, build_run_record, write_run_record
from utils.logger import configure_toolkit_logging, parse_log_level
from utils.validators import ValidationError
from utils.version import TOOL_NAME, __version__


PROG_NAME = "genformer"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

# 需要設定日誌輸出的套件
LOGGED_PACKAGES = ("cli", "config", "dataset", "corruptions", "builders", "augment", "evaluation", "utils")

logger = logging.getLogger(__name__)


@dataclass
class CliState:
    """命令群組解析後的共用狀態"""
    config: ToolConfig
    config_path: Optional[Path] = None


def _success(message: str):
    click.echo(f"{Fore.GREEN}✅ {message}{Style.RESET_ALL}")


def _failure(message: str):
    click.echo(f"{Fore.RED}❌ {message}{Style.RESET_ALL}", err=True)


def _versions(table_version: Optional[str] = None) -> Dict[str, str]:
    return {"toolkit": __version__,
            "severity_table": table_version or default_severity_table().version}


def _record(command: str, inputs: Dict[str, Any], output: Path, seed: Optional[int] = None,
            parameters: Optional[Dict[str, Any]] = None, table_version: Optional[str] = None,
            extra_outputs: Optional[Dict[str, Path]] = None) -> Path:
    """為輸出寫入執行紀錄"""
    outputs = {"output": output}
    outputs.update(extra_outputs or {})
    record = build_run_record(command, inputs, outputs, seed,
                              parameters={key: value for key, value in (parameters or {}).items()
                                          if value is not None},
                              versions=_versions(table_version))
    return write_run_record(output, record)


def _configure_logging(config: ToolConfig):
    configure_toolkit_logging(LOGGED_PACKAGES, log_file=config.log_file, level=config.log_level,
                              format_string=config.log_format)


def _print_version(ctx: click.Context, param: click.Parameter, value: bool):
    if not value or ctx.resilient_parsing:
        return
    click.echo(f"{TOOL_NAME} {__version__}")
    click.echo(f"severity-params {default_severity_table().version}")
    ctx.exit(EXIT_OK)


def _state(ctx: click.Context) -> CliState:
    return ctx.find_object(CliState)


def _output(ctx: click.Context, out: Optional[str]) -> Optional[Path]:
    return _state(ctx).config.output_path(out) if out else None


@click.group(name=PROG_NAME, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--version", is_flag=True, expose_value=False, is_eager=True, callback=_print_version,
              help="顯示工具與嚴重度參數表版本")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="YAML 設定檔（命令列旗標優先於設定檔）")
@click.option("--log-level", default=None, help="日誌級別（DEBUG/INFO/WARNING/ERROR）")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], log_level: Optional[str]):
    """GenFormer 資料管線與穩健性基準工具"""
    config = load_tool_config(config_path)
    if log_level is not None:
        level = parse_log_level(log_level, default=-1)
        if level < 0:
            raise click.BadParameter(f"無效的日誌級別: {log_level}", param_hint="--log-level")
        config = config.with_overrides(log_level=level)
    _configure_logging(config)
    ctx.obj = CliState(config=config, config_path=Path(config_path) if config_path else None)
    logger.debug(f"子命令 {ctx.invoked_subcommand}，設定 {config}")


# ---- dataset-core ----

@cli.command("stats")
@click.option("--manifest", "manifest_path", required=True, help="資料集清單")
@click.option("--out", default=None, help="輸出統計 JSON（可選）")
@click.option("--threads", type=int, default=None, help="解碼執行緒數（0 表示自動）")
@click.pass_context
def stats_command(ctx: click.Context, manifest_path: str, out: Optional[str], threads: Optional[int]):
    """計算逐通道平均值與標準差"""
    config = _state(ctx).config.with_overrides(threads=threads)
    manifest = load_manifest(manifest_path)
    stats = compute_channel_stats(manifest, threads=config.worker_count)
    click.echo("mean " + " ".join(f"{value:.4f}" for value in stats.mean))
    click.echo("std  " + " ".join(f"{value:.4f}" for value in stats.std))
    if out:
        target = atomic_write_json(_output(ctx, out),
                                   {"manifest": manifest.name, "items": len(manifest), **stats.to_dict()})
        _record("stats", {"manifest": manifest_path}, target)
        _success(f"統計已寫入 {target}")


@cli.command("subset")
@click.option("--manifest", "manifest_path", required=True, help="來源清單")
@click.option("--fraction", type=float, required=True, help="抽取比例 (0, 1]")
@click.option("--seed", type=int, default=None, help="64 位元種子")
@click.option("--no-stratify", is_flag=True, help="整體均勻抽取而非依類別分層")
@click.option("--name", default=None, help="輸出清單名稱")
@click.option("--out", required=True, help="輸出清單檔")
@click.pass_context
def subset_command(ctx: click.Context, manifest_path: str, fraction: float, seed: Optional[int],
                   no_stratify: bool, name: Optional[str], out: str):
    """依類別分層抽取子集"""
    seed = _state(ctx).config.with_overrides(seed=seed).require_seed("subset")
    manifest = load_manifest(manifest_path)
    subset = stratified_subset(manifest, fraction, seed, stratify=not no_stratify, name=name)
    target = write_manifest(subset, _output(ctx, out))
    _record("subset", {"manifest": manifest_path}, target, seed=seed,
            parameters={"fraction": fraction, "stratify": not no_stratify})
    _success(f"子集 {len(manifest)} → {len(subset)} 項: {target}")


@cli.command("ingest-gen")
@click.option("--images", "image_dir", required=True, help="生成影像目錄")
@click.option("--label-space", "label_space_path", required=True, help="下游標籤空間（清單檔或類別列表檔）")
@click.option("--label-map", default=None, help="標籤對照檔（未提供時以類別子目錄推斷）")
@click.option("--name", default=None, help="輸出清單名稱")
@click.option("--provenance", default=None, help="生成器說明")
@click.option("--threads", type=int, default=None, help="解碼執行緒數（0 表示自動）")
@click.option("--out", required=True, help="輸出清單檔")
@click.pass_context
def ingest_gen_command(ctx: click.Context, image_dir: str, label_space_path: str, label_map: Optional[str],
                       name: Optional[str], provenance: Optional[str], threads: Optional[int], out: str):
    """匯入生成影像並檢查標籤屬於下游標籤空間"""
    config = _state(ctx).config.with_overrides(threads=threads)
    label_space = load_label_space(label_space_path)
    manifest = ingest_generated(image_dir, label_space, label_map=label_map, name=name,
                                provenance=provenance, threads=config.worker_count)
    target = write_manifest(manifest, _output(ctx, out))
    _record("ingest-gen", {"images": image_dir, "label_space": label_space_path, "label_map": label_map},
            target, parameters={"provenance": provenance})
    _success(f"匯入 {manifest.n_gen} 張生成影像: {target}")


@cli.command("mix")
@click.option("--real", "real_path", required=True, help="真實資料清單")
@click.option("--gen", "gen_path", required=True, help="生成資料清單")
@click.option("--ratio", type=float, default=None, help="生成項數相對於 N_real 的比例")
@click.option("--count", type=int, default=None, help="生成項數（與 --ratio 擇一）")
@click.option("--seed", type=int, default=None, help="64 位元種子")
@click.option("--name", default=None, help="輸出清單名稱")
@click.option("--out", required=True, help="輸出清單檔")
@click.pass_context
def mix_command(ctx: click.Context, real_path: str, gen_path: str, ratio: Optional[float], count: Optional[int],
                seed: Optional[int], name: Optional[str], out: str):
    """將真實資料與分層抽樣的生成資料串接為訓練清單"""
    seed = _state(ctx).config.with_overrides(seed=seed).require_seed("mix")
    real = load_manifest(real_path)
    generated = load_manifest(gen_path)
    mixed = mix_datasets(real, generated, seed, count=count, ratio=ratio, name=name)
    target = write_manifest(mixed, _output(ctx, out))
    _record("mix", {"real": real_path, "gen": gen_path}, target, seed=seed,
            parameters={"ratio": ratio, "count": count})
    _success(f"混合清單 N_real={mixed.n_real} + N_gen={mixed.n_gen} = {len(mixed)}: {target}")


# ---- corruptions ----

@cli.command("corrupt")
@click.option("--manifest", "manifest_path", required=True, help="乾淨測試清單（需統一幾何）")
@click.option("--profile", type=click.Choice(["natural", "medical"]), default=None, help="損壞設定檔")
@click.option("--seed", type=int, default=None, help="64 位元種子")
@click.option("--params", "params_path", default=None, help="嚴重度參數覆寫檔")
@click.option("--frost-texture", default=None, help="frost 紋理影像（未提供時程序生成）")
@click.option("--kinds", default=None, help="只建立部分損壞類型（逗號分隔）")
@click.option("--threads", type=int, default=None, help="執行緒數（0 表示自動）")
@click.option("--out", required=True, help="輸出目錄")
@click.pass_context
def corrupt_command(ctx: click.Context, manifest_path: str, profile: Optional[str], seed: Optional[int],
                    params_path: Optional[str], frost_texture: Optional[str], kinds: Optional[str],
                    threads: Optional[int], out: str):
    """建立損壞測試集 <out>/<kind>/<severity>/"""
    config = _state(ctx).config.with_overrides(
        seed=seed, threads=threads, profile=profile,
        params_path=Path(params_path) if params_path else None,
        frost_texture=Path(frost_texture) if frost_texture else None)
    seed = config.require_seed("corrupt")
    manifest = load_manifest(manifest_path)
    table = load_severity_table(config.params_path)
    texture = decode_image(config.frost_texture) if config.frost_texture else None
    kind_list = [kind.strip() for kind in kinds.split(",") if kind.strip()] if kinds else None

    tree = build_corrupted_testset(manifest, config.profile, seed, _output(ctx, out),
                                   threads=config.worker_count, table=table, frost_texture=texture,
                                   kinds=kind_list)
    _record("corrupt", {"manifest": manifest_path, "params": config.params_path,
                        "frost_texture": config.frost_texture},
            tree.root, seed=seed, table_version=table.version,
            parameters={"profile": tree.profile.value, "kinds": [kind.value for kind in tree.kinds]})
    _success(f"損壞測試集 {len(tree.kinds)} 類 × {len(tree.severities)} 級，共 {tree.image_count} 張: {tree.root}")


# ---- testset-builders ----

def _load_source(source: str, threads: int) -> DatasetManifest:
    """來源可以是清單檔或 <root>/<class_key>/ 目錄樹"""
    path = Path(source)
    if path.is_dir():
        return manifest_from_class_tree(path, threads=threads)
    return load_manifest(source)


@cli.command("build-v2")
@click.option("--source", required=True, help="來源清單檔或類別目錄樹")
@click.option("--target", "target_path", required=True, help="目標標籤空間（清單檔或類別列表檔）")
@click.option("--size", type=int, default=None, help="目標邊長（未提供時使用目標清單的幾何）")
@click.option("--channels", type=click.Choice(["1", "3"]), default="3", help="目標通道數")
@click.option("--name", default=None, help="輸出清單名稱")
@click.option("--threads", type=int, default=None, help="執行緒數（0 表示自動）")
@click.option("--out", required=True, help="輸出目錄")
@click.pass_context
def build_v2_command(ctx: click.Context, source: str, target_path: str, size: Optional[int], channels: str,
                     name: Optional[str], threads: Optional[int], out: str):
    """以類別交集建立偏移測試集（-V2 / -R）"""
    config = _state(ctx).config.with_overrides(threads=threads)
    source_manifest = _load_source(source, config.worker_count)
    target_space = load_label_space(target_path)

    geometry = None
    if size is not None:
        geometry = ImageGeometry(size, size, int(channels))
    elif Path(target_path).suffix.lower() == ".json":
        geometry = load_manifest(target_path).geometry
    if geometry is None:
        raise ValidationError("必須以 --size 指定目標幾何，或提供具有幾何的目標清單", field="size")

    intersection = intersect_classes(source_manifest.label_space, target_space)
    out_dir = _output(ctx, out)
    built = build_intersection_testset(source_manifest, intersection, geometry, out_dir,
                                       threads=config.worker_count, name=name)
    atomic_write_json(out_dir / "classes.json", intersection.to_dict())
    _record("build-v2", {"source": source, "target": target_path}, out_dir,
            parameters={"geometry": str(geometry)})
    _success(f"交集測試集 {len(intersection.mapping)} 類，{len(built)} 項: {out_dir}")


@cli.command("build-a")
@click.option("--val", "val_path", required=True, help="驗證集清單")
@click.option("--predictions", "predictions_path", required=True, help="參考模型的預測檔")
@click.option("--name", default=None, help="輸出清單名稱")
@click.option("--threads", type=int, default=None, help="執行緒數（0 表示自動）")
@click.option("--out", required=True, help="輸出目錄")
@click.pass_context
def build_a_command(ctx: click.Context, val_path: str, predictions_path: str, name: Optional[str],
                    threads: Optional[int], out: str):
    """以參考模型的錯誤預測建立 -A 測試集"""
    config = _state(ctx).config.with_overrides(threads=threads)
    val = load_manifest(val_path)
    preds = load_predictions(predictions_path, dataset_id=val.name)
    out_dir = _output(ctx, out)
    built = build_adversarial_filter_testset(val, preds, out_dir, threads=config.worker_count, name=name)
    _record("build-a", {"val": val_path, "predictions": predictions_path}, out_dir)
    _success(f"錯誤預測測試集 {len(built)}/{len(val)} 項: {out_dir}")


# ---- augment ----

@cli.command("augment")
@click.option("--manifest", "manifest_path", required=True, help="輸入清單")
@click.option("--op", type=click.Choice([op.value for op in AugmentOp]), required=True, help="增強操作")
@click.option("--seed", type=int, default=None, help="64 位元種子")
@click.option("--alpha-mixup", type=float, default=0.8, show_default=True)
@click.option("--alpha-cutmix", type=float, default=1.0, show_default=True)
@click.option("--p-switch", type=float, default=0.5, show_default=True)
@click.option("--severity", type=int, default=3, show_default=True, help="AugMix 強度")
@click.option("--width", type=int, default=3, show_default=True, help="AugMix 鏈數")
@click.option("--depth", type=int, default=0, show_default=True, help="AugMix 鏈長（0 表示隨機 1..3）")
@click.option("--threads", type=int, default=None, help="執行緒數（0 表示自動）")
@click.option("--out", required=True, help="輸出目錄")
@click.pass_context
def augment_command(ctx: click.Context, manifest_path: str, op: str, seed: Optional[int], alpha_mixup: float,
                    alpha_cutmix: float, p_switch: float, severity: int, width: int, depth: int,
                    threads: Optional[int], out: str):
    """離線增強：寫出影像、清單與軟標籤檔"""
    config = _state(ctx).config.with_overrides(seed=seed, threads=threads)
    seed = config.require_seed("augment")
    manifest = load_manifest(manifest_path)
    mix_config = MixConfig(alpha_mixup=alpha_mixup, alpha_cutmix=alpha_cutmix, p_switch=p_switch)
    augmix_config = AugmixConfig(severity=severity, width=width, depth=depth)
    out_dir = _output(ctx, out)
    augmented, _ = augment_manifest(manifest, op, seed, out_dir, mix_config=mix_config,
                                    augmix_config=augmix_config, threads=config.worker_count)
    parameters: Dict[str, Any] = {"op": op}
    if AugmentOp.parse(op).pairs:
        parameters.update(alpha_mixup=alpha_mixup, alpha_cutmix=alpha_cutmix, p_switch=p_switch)
    else:
        parameters.update(severity=severity, width=width, depth=depth)
    _record("augment", {"manifest": manifest_path}, out_dir, seed=seed, parameters=parameters)
    _success(f"離線增強 {op}: {len(augmented)} 項: {out_dir}")


# ---- eval ----

@cli.command("eval")
@click.option("--model-id", required=True, help="模型識別")
@click.option("--manifest", "manifest_path", required=True, help="乾淨測試清單")
@click.option("--predictions", "predictions_path", required=True, help="乾淨測試集的預測檔")
@click.option("--tree", "tree_path", default=None, help="損壞測試集目錄（可選）")
@click.option("--tree-predictions", default=None, help="損壞測試集預測目錄 <dir>/<kind>/<severity>.csv")
@click.option("--baseline-matrix", default=None, help="基準模型錯誤矩陣 CSV（計算正規化 mCE）")
@click.option("--dataset-id", default=None, help="測試集識別（預設為清單名稱）")
@click.option("--matrix-out", default=None, help="另存錯誤矩陣 CSV")
@click.option("--threads", type=int, default=None, help="執行緒數（0 表示自動）")
@click.option("--out", required=True, help="輸出報告 JSON")
@click.pass_context
def eval_command(ctx: click.Context, model_id: str, manifest_path: str, predictions_path: str,
                 tree_path: Optional[str], tree_predictions: Optional[str], baseline_matrix: Optional[str],
                 dataset_id: Optional[str], matrix_out: Optional[str], threads: Optional[int], out: str):
    """計算 clean error 與（可選的）錯誤矩陣、mCE，輸出評估報告"""
    config = _state(ctx).config.with_overrides(threads=threads)
    if (tree_path is None) != (tree_predictions is None):
        raise click.UsageError("--tree 與 --tree-predictions 必須同時提供")
    if baseline_matrix is not None and tree_path is None:
        raise click.UsageError("--baseline-matrix 需要搭配 --tree")

    manifest = load_manifest(manifest_path)
    preds = load_predictions(predictions_path, model_id=model_id, dataset_id=manifest.name)
    error = clean_error(manifest, preds)

    matrix, profile, table_version = None, None, None
    if tree_path is not None:
        tree = load_corrupted_tree(tree_path)
        cells = load_tree_predictions(tree_predictions, tree, model_id=model_id)
        matrix = corruption_error_matrix(tree, cells, threads=config.worker_count)
        profile, table_version = tree.profile.value, tree.table_version
    baseline = load_matrix_csv(baseline_matrix) if baseline_matrix else None

    report = build_eval_report(model_id, dataset_id or manifest.name, error, matrix=matrix, baseline=baseline,
                               profile=profile)
    target = write_report(report, _output(ctx, out))
    extra = {}
    if matrix is not None and matrix_out:
        extra["matrix"] = write_matrix_csv(matrix, _output(ctx, matrix_out))
    _record("eval", {"manifest": manifest_path, "predictions": predictions_path, "tree": tree_path,
                     "tree_predictions": tree_predictions, "baseline_matrix": baseline_matrix},
            target, table_version=table_version, extra_outputs=extra)

    summary = f"clean_error={format_value(report.clean_error)}"
    if report.mce is not None:
        summary += f" mCE={format_value(report.mce)}"
    if report.normalized_mce is not None:
        summary += f" normalized_mCE={format_value(100.0 * report.normalized_mce)}"
    _success(f"{model_id}: {summary} → {target}")


@cli.command("mce")
@click.option("--matrix", "matrix_path", required=True, help="錯誤矩陣 CSV（kind,severity,error）")
@click.option("--baseline", "baseline_path", default=None, help="基準模型錯誤矩陣 CSV")
def mce_command(matrix_path: str, baseline_path: Optional[str]):
    """印出 mCE（有基準時第二行為正規化 mCE × 100）"""
    matrix = load_matrix_csv(matrix_path)
    baseline = load_matrix_csv(baseline_path) if baseline_path else None
    plain, normalized = mce(matrix, baseline)
    click.echo(format_value(plain))
    if normalized is not None:
        click.echo(format_value(100.0 * normalized))


@cli.command("delta")
@click.option("--before", "before_path", required=True, help="基準模型的評估報告")
@click.option("--after", "after_path", required=True, help="比較模型的評估報告")
@click.option("--out", default=None, help="輸出差值報告 JSON（可選）")
@click.option("--csv", "csv_path", default=None, help="輸出差值表格 CSV（可選）")
@click.pass_context
def delta_command(ctx: click.Context, before_path: str, after_path: str, out: Optional[str],
                  csv_path: Optional[str]):
    """比較兩份評估報告（delta = after − before，下降即改善）"""
    report = delta_report(load_report(before_path), load_report(after_path))
    click.echo(report.render())
    inputs = {"before": before_path, "after": after_path}
    if out:
        target = atomic_write_json(_output(ctx, out), report.to_dict())
        _record("delta", inputs, target)
    if csv_path:
        target = write_table_csv(report.to_frame(), _output(ctx, csv_path), index=False)
        _record("delta", inputs, target)
    improved = sum(1 for row in report.rows if row.improved)
    _success(f"{report.after_model} 相對 {report.before_model}: {improved}/{len(report.rows)} 項指標改善")


@cli.command("table")
@click.option("--report", "report_paths", multiple=True, required=True, help="評估報告（可重複）")
@click.option("--baseline", required=True, help="作為差值基準的模型識別")
@click.option("--metric", "metrics", multiple=True, help="欄位指標（預設 clean_error 與 mce）")
@click.option("--out", required=True, help="輸出表格 CSV")
@click.pass_context
def table_command(ctx: click.Context, report_paths: Sequence[str], baseline: str, metrics: Sequence[str],
                  out: str):
    """並列多份評估報告，非基準列顯示 "數值 (差值)" """
    reports = {}
    for path in report_paths:
        report = load_report(path)
        if report.model_id in reports:
            raise ValidationError(f"重複的模型識別: {report.model_id}", field="model_id", value=report.model_id)
        reports[report.model_id] = report
    frame = benchmark_table(reports, baseline, metrics=list(metrics) or None)
    click.echo(frame.to_string())
    target = write_table_csv(frame, _output(ctx, out))
    _record("table", {f"report.{name}": path for name, path in zip(reports, report_paths)}, target,
            parameters={"baseline": baseline})
    _success(f"基準表格已寫入 {target}")


@cli.command("attn-dist")
@click.option("--dump", "dump_paths", multiple=True, required=True, help="注意力傾印目錄（可重複，結果取平均）")
@click.option("--out", default=None, help="輸出 layer,head,distance CSV（可選）")
@click.pass_context
def attn_dist_command(ctx: click.Context, dump_paths: Sequence[str], out: Optional[str]):
    """計算每層每個頭的平均注意力距離（像素）"""
    dumps = [load_attention_dump(path) for path in dump_paths]
    distances = average_attention_distances(dumps)
    for layer, value in enumerate(distances.per_layer):
        click.echo(f"layer {layer}: {format_value(value)}")
    if out:
        frame = pd.DataFrame(distances.to_rows(), columns=["layer", "head", "distance"])
        target = atomic_write_text(_output(ctx, out),
                                   frame.to_csv(index=False, lineterminator="\n", float_format="%.6f"))
        _record("attn-dist", {f"dump.{i}": path for i, path in enumerate(dump_paths)}, target,
                parameters={"patch": distances.patch})
        _success(f"注意力距離已寫入 {target}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    執行命令列

    Args:
        argv: 參數列表（不含程式名稱）；None 時讀取 sys.argv

    Returns:
        結束碼（0 成功、1 使用方式錯誤、2 驗證失敗、3 IO 失敗）
    """
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name=PROG_NAME,
                          standalone_mode=False)
        return result if isinstance(result, int) else EXIT_OK
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        _failure("已中止")
        return EXIT_USAGE
    except ValidationError as e:
        where = f" [{e.field}]" if e.field else ""
        _failure(f"驗證失敗{where}: {e}")
        logger.debug("驗證失敗", exc_info=True)
        return EXIT_VALIDATION
    except OSError as e:
        _failure(f"IO 失敗: {e}")
        logger.debug("IO 失敗", exc_info=True)
        return EXIT_IO
