"""
서브커맨드 구현

각 cmd_* 함수는 설정 객체와 경로를 받아 작업을 수행하고, 기록한 파일 경로를 dict 로 돌려준다.
argparse 와는 분리되어 있어 테스트에서 직접 호출할 수 있다.

[산출물]
- prepare      : mesh.obj, texel_map.stxm, atlas_report.json, (geodesics.stxd)
- render-views : depth_XX.png, gbuffer_XX.stxg, cameras.json, views.json
- backproject  : texture.png, texture_mask.png, texture.stxt, (texture_inpainted.png)
- train        : loss_curve.csv, epoch_XXX.stxw, final.stxw, best.stxw
- eval         : metrics.csv, gallery/, summary.pdf
"""
import json
import os
import time
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from core.backproject import backproject, run_iterative
from core.config import (
    PipelineConfig, TrainConfig, load_views_manifest, load_cameras, manifest_images_exist,
    save_cameras, save_views_manifest,
)
from core.evalkit import build_seam_graph, median_by_strategy, metrics_row, run_ablation
from core.inpaint import inpaint_pullpush, texel_charts
from core.report import GalleryEntry, report
from core.synthetic import augment_views, corpus_specs, holdout_corpus, make_scenes, render_views
from core.texture import Texture, load_texture_binary, load_texture_png, save_texture_binary, save_texture_png
from core.trainer import TrainResult, holdout_eval, prepare_dataset, train
from geometry.geodesics import GeodesicCache, load_geodesic_cache, precompute_texel_fields, save_geodesic_cache
from geometry.mesh import (
    Mesh, TexelMap, build_atlas_report, build_texel_map, compute_normals, load_mesh, load_texel_map,
    prepare_mesh, save_mesh, save_texel_map,
)
from geometry.raster import depth_visualization, make_eval_views, render_gbuffer, save_gbuffer
from neural.network import NetWeights
from neural.weights_io import load_weights
from utils.constants import (
    ABLATION_K_VALUES, CACHE_DIR_ENV, DEFAULT_THRESHOLD, EVAL_VIEW_COUNT, HOLDOUT_SEED,
)
from utils.errors import FormatError, UsageError
from utils.image_io import save_gray, save_rgb
from utils.logger import logger
from validators import AtlasValidator, MeshValidator, WeightsValidator

EVAL_SUITES = ['strategies', 'ablation-k', 'ablation-geodesics']


# ============================================================
# 준비 산출물 읽기
# ============================================================

def geodesic_cache_path(prepared: Path, mesh: Mesh) -> Path:
    """STX_CACHE_DIR 가 있으면 메쉬 해시 이름으로, 없으면 준비 폴더에"""
    cache_dir = os.environ.get(CACHE_DIR_ENV, '')
    if cache_dir:
        return Path(cache_dir) / f'{mesh.content_hash()[:16]}.stxd'
    return Path(prepared) / 'geodesics.stxd'


def load_prepared(prepared: Path) -> Tuple[Mesh, TexelMap]:
    """prepare 결과 폴더 → (메쉬, 텍셀 맵)"""
    prepared = Path(prepared)
    mesh_path = prepared / 'mesh.obj'
    if not mesh_path.exists():
        raise FormatError(f"준비된 메쉬가 없습니다 (prepare 를 먼저 실행하세요): {mesh_path}")
    mesh = compute_normals(load_mesh(mesh_path))
    texel_map = load_texel_map(prepared / 'texel_map.stxm')
    if texel_map.valid.any() and texel_map.face_id[texel_map.valid].max() >= mesh.face_count:
        raise FormatError(f"텍셀 맵이 메쉬와 맞지 않습니다: {prepared}")
    return mesh, texel_map


def _geodesic_cache(prepared: Path, mesh: Mesh, radius: float) -> GeodesicCache:
    path = geodesic_cache_path(prepared, mesh)
    if path.exists():
        cache = load_geodesic_cache(path, mesh)
        if abs(cache.radius - radius) < 1e-12:
            logger.info(f"지오데식 캐시 사용: {path} (거리장 {len(cache)}개)")
            return cache
        logger.warning(f"캐시 반경 {cache.radius} != 설정 반경 {radius} - 새로 계산합니다")
    return GeodesicCache(mesh, radius=radius)


def _load_net(path: Optional[str]) -> NetWeights:
    if not path:
        raise UsageError("neural 전략에는 --weights 가중치 파일이 필요합니다")
    return WeightsValidator().require(load_weights(path), Path(path).name)


# ============================================================
# prepare / render-views / backproject
# ============================================================

def cmd_prepare(cfg: PipelineConfig, out: Path, geodesics: bool = False) -> Dict[str, Path]:
    """정규화 + 법선 + 텍셀 맵 + 아틀라스 보고서 (+ 지오데식 캐시)"""
    if not cfg.mesh:
        raise UsageError("메쉬 경로가 필요합니다")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    raw = MeshValidator().require(load_mesh(cfg.mesh), Path(cfg.mesh).name)

    paths = {'mesh': out / 'mesh.obj', 'texel_map': out / 'texel_map.stxm',
             'atlas_report': out / 'atlas_report.json'}
    save_mesh(prepare_mesh(raw), paths['mesh'])
    # 이후 단계는 모두 저장된 OBJ 에서 다시 읽으므로 여기서도 같은 메쉬를 쓴다
    mesh = compute_normals(load_mesh(paths['mesh']))

    texel_map = build_texel_map(mesh, cfg.texture_width, cfg.texture_height)
    atlas = build_atlas_report(mesh, texel_map)
    _, problems, notes = AtlasValidator().validate_full(atlas)
    for message in problems + notes:
        logger.warning(f"아틀라스: {message}")
    save_texel_map(texel_map, paths['texel_map'])
    with open(paths['atlas_report'], 'w', encoding='utf-8') as f:
        json.dump(atlas.to_dict(), f, ensure_ascii=False, indent=2)

    if geodesics:
        cache = GeodesicCache(mesh, radius=cfg.geodesic_radius)
        precompute_texel_fields(cache, texel_map, cfg.workers)
        paths['geodesics'] = geodesic_cache_path(out, mesh)
        paths['geodesics'].parent.mkdir(parents=True, exist_ok=True)
        save_geodesic_cache(cache, paths['geodesics'])
    logger.info(f"준비 완료: {out} (유효 텍셀 {texel_map.valid_count}개, 차트 {atlas.chart_count}개)")
    return paths


def cmd_render_views(cfg: PipelineConfig, prepared: Path, out: Path) -> Dict[str, Path]:
    """외부 이미지 생성기용 깊이 PNG + G-버퍼 + 매니페스트 템플릿"""
    mesh, _ = load_prepared(prepared)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cameras = cfg.cameras()
    for k, camera in enumerate(cameras):
        gbuf = render_gbuffer(mesh, camera, cfg.workers)
        save_gray(out / f'depth_{k:02d}.png', depth_visualization(gbuf, camera))
        save_gbuffer(gbuf, out / f'gbuffer_{k:02d}.stxg')
    paths = {'cameras': out / 'cameras.json', 'manifest': out / 'views.json'}
    save_cameras(cameras, paths['cameras'])
    save_views_manifest(cameras, paths['manifest'])
    logger.info(f"시점 {len(cameras)}개 렌더링: {out}")
    return paths


def cmd_backproject(cfg: PipelineConfig, prepared: Path, manifest: Path, out: Path) -> Dict[str, Path]:
    """뷰 이미지 → 텍스처 (+ cfg.inpaint 이면 구멍 채운 텍스처)"""
    weights = _load_net(cfg.weights) if cfg.strategy == 'neural' else None
    mesh, texel_map = load_prepared(prepared)
    views = load_views_manifest(manifest, mesh, cfg.workers)
    geo = None
    if cfg.strategy == 'neural' and cfg.use_geodesics:
        geo = _geodesic_cache(prepared, mesh, cfg.geodesic_radius)

    start = time.perf_counter()
    if cfg.schedule:
        texture = run_iterative(texel_map, mesh, views, cfg.schedule, cfg.strategy, weights, cfg.thr,
                                cfg.power, cfg.K, geo, cfg.use_geodesics, cfg.workers)
    else:
        texture = backproject(cfg.strategy, texel_map, views, cfg.thr, cfg.power, weights, cfg.K,
                              None, geo, cfg.use_geodesics, cfg.workers)
    elapsed = (time.perf_counter() - start) * 1000.0

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {'texture': out / 'texture.png', 'mask': out / 'texture_mask.png', 'binary': out / 'texture.stxt'}
    save_texture_png(texture, paths['texture'], paths['mask'])
    save_texture_binary(texture, paths['binary'])
    if cfg.inpaint:
        paths['inpainted'] = out / 'texture_inpainted.png'
        save_texture_png(inpaint_pullpush(texture, texel_map, mesh), paths['inpainted'])
    logger.info(f"역투영 ({cfg.strategy}): 채워진 텍셀 {int(texture.filled.sum())}/{texel_map.valid_count}, "
                f"{elapsed:.0f} ms")
    return paths


def write_round_trip_views(prepared: Path, manifest: Path, target: Texture, workers: int = 1) -> List[Path]:
    """알려진 텍스처로 렌더링한 뷰 이미지를 매니페스트 위치에 기록 (외부 생성기 대신)"""
    mesh, _ = load_prepared(prepared)
    with open(manifest, 'r', encoding='utf-8') as f:
        entries = json.load(f)['views']
    cameras = load_cameras(Path(manifest).parent / 'cameras.json')
    written = []
    for entry, view in zip(entries, render_views(mesh, target, cameras, workers)):
        path = Path(manifest).parent / entry['image']
        save_rgb(path, view.image)
        written.append(path)
    return written


def cmd_pipeline(cfg: PipelineConfig, out: Path, target_texture: Optional[Path] = None,
                 timing: bool = True) -> Dict[str, Path]:
    """prepare → render-views → [외부 단계 또는 왕복 렌더링] → backproject → inpaint → eval"""
    out = Path(out)
    prepared, views_dir, tex_dir = out / 'prepared', out / 'views', out / 'texture'
    paths = dict(cmd_prepare(cfg, prepared, geodesics=cfg.strategy == 'neural' and cfg.use_geodesics))
    paths.update(cmd_render_views(cfg, prepared, views_dir))
    manifest = paths['manifest']

    mesh, texel_map = load_prepared(prepared)
    target = None
    if target_texture is not None:
        target = load_texture_png(target_texture, texel_map)
        write_round_trip_views(prepared, manifest, target, cfg.workers)
    elif not manifest_images_exist(manifest):
        logger.info(f"뷰 이미지가 없습니다. {views_dir} 의 depth_XX.png 로 view_XX.png 를 만든 뒤 "
                    f"backproject 를 실행하세요")
        return paths

    paths.update(cmd_backproject(replace(cfg, inpaint=True), prepared, manifest, tex_dir))
    if target is not None:
        raw = load_texture_binary(paths['binary'])
        _, charts = texel_charts(mesh, texel_map)
        row = metrics_row(Path(cfg.mesh).stem, cfg.strategy, cfg.K, cfg.use_geodesics and cfg.strategy == 'neural',
                          cfg.thr, raw, target, mesh, build_seam_graph(mesh, texel_map), charts, texel_map, 0.0)
        gallery = [GalleryEntry(Path(cfg.mesh).stem, cfg.strategy, raw, mesh)]
        written = report([row], out / 'eval', gallery, timing=timing)
        paths['metrics'] = written['csv']
        logger.info(f"왕복 평가: L1={row['L1']:.4f}, 커버리지={row['coverage']:.3f}")
    return paths


# ============================================================
# train / eval
# ============================================================

def cmd_train(cfg: TrainConfig, max_steps: Optional[int] = None) -> TrainResult:
    """합성 코퍼스 준비 → 학습 → 체크포인트/손실 곡선 저장"""
    specs = corpus_specs(cfg.scene_kinds, cfg.patterns, cfg.scene_count, cfg.seed)
    progress = lambda done, total, spec: logger.info(f"장면 준비 {done}/{total}: {spec}")  # noqa: E731
    dataset = prepare_dataset(specs, cfg, cfg.workers, progress)
    holdout = None
    if cfg.holdout_count:
        holdout = prepare_dataset(holdout_corpus(cfg.holdout_count, HOLDOUT_SEED + cfg.seed), cfg,
                                  cfg.workers, progress)
    result = train(dataset, cfg, cfg.output_dir, holdout, max_steps=max_steps)
    logger.info(f"학습 종료: 최적 에폭 {result.best_epoch}, 마지막 손실 "
                f"{result.epoch_losses[-1] if result.epoch_losses else float('nan'):.5f}")
    return result


def cmd_eval(cfg: TrainConfig, out: Path, weights_path: Optional[str] = None, suite: str = 'strategies',
             perturb: float = 0.0, k_values: Sequence[int] = ABLATION_K_VALUES,
             thr: float = DEFAULT_THRESHOLD, eval_views: int = EVAL_VIEW_COUNT, train_per_setting: bool = False,
             timing: bool = True, pdf: bool = True) -> Dict[str, Path]:
    """평가 장면에서 전략 비교 또는 절제 표 작성"""
    if suite not in EVAL_SUITES:
        raise UsageError(f"알 수 없는 평가 모음: {suite} (가능: {', '.join(EVAL_SUITES)})")
    weights = _load_net(weights_path) if weights_path else None
    if suite != 'strategies' and weights is None and not train_per_setting:
        raise UsageError("절제 평가에는 --weights 또는 --train-per-setting 이 필요합니다")

    specs = holdout_corpus(cfg.holdout_count, HOLDOUT_SEED + cfg.seed)
    samples = make_scenes(specs, cfg.texture_size, cfg.view_resolution, cfg.use_geodesics,
                          cfg.geodesic_radius, cfg.workers)
    if perturb > 0:
        samples = [augment_views(s, perturb, cfg.seed) for s in samples]
    cameras = make_eval_views(eval_views, width=cfg.view_resolution, height=cfg.view_resolution)

    out = Path(out)
    gallery: List[GalleryEntry] = []
    if suite == 'strategies':
        collected = []
        rows = holdout_eval(weights, samples, cfg.K, thr, cfg.use_geodesics, cfg.workers, cameras, collected)
        meshes = {s.name: s.mesh for s in samples}
        gallery = [GalleryEntry(name, strategy, tex, meshes[name]) for name, strategy, tex in collected]
    else:
        source = weights if not train_per_setting else _per_setting_trainer(cfg, out)
        axis = 'K' if suite == 'ablation-k' else 'geodesics'
        rows = run_ablation(samples, source, axis, k_values, cfg.K, thr, cfg.workers, cameras)

    for column in ('L1', 'seam_energy'):
        for strategy, value in median_by_strategy(rows, column).items():
            logger.info(f"중앙값 {column} [{strategy}] = {value:.5f}")
    return report(rows, out, gallery, title=f'TexelFusion {suite}', pdf=pdf, timing=timing)


def _per_setting_trainer(cfg: TrainConfig, out: Path):
    """(K, geodesics) 설정마다 한 번씩 학습하는 가중치 공급자"""
    trained: Dict[Tuple[int, bool], NetWeights] = {}

    def weights_for(K: int, use_geodesics: bool) -> NetWeights:
        key = (K, use_geodesics)
        if key not in trained:
            run_cfg = replace(cfg, K=K, use_geodesics=use_geodesics,
                              output_dir=str(out / f'train_K{K}_geo{int(use_geodesics)}'))
            trained[key] = cmd_train(run_cfg).best_weights
        return trained[key]

    return weights_for
