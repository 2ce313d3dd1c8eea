"""
역투영 네트워크 학습

[흐름]
1. prepare_dataset : 합성 장면 생성 + 이웃 수집 (장면 단위 병렬)
2. train           : 장면 에폭마다 텍셀을 뽑아 항목(128 텍셀)으로 묶고,
                     스텝마다 batch_size 개 항목의 평균 L1 로 Adam 갱신
3. holdout_eval    : 학습에 쓰지 않은 장면에서 베이스라인 3종과 비교

모든 난수는 cfg.seed 로 만든 생성기 하나에서 나온다 (workers=1 이면 완전 재현)
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.backproject import backproject_frontfacing
from core.config import TrainConfig
from core.evalkit import evaluate_scene
from core.gather import GatherResult, ViewBundle, gather_neighborhoods
from core.synthetic import SceneSample, augment_views, make_synthetic_scene
from neural.network import (
    NetArch, NetWeights, batch_from_gather, init_weights, loss_and_grads, predict_gather,
)
from neural.optim import Adam
from neural.weights_io import save_weights
from threads.scene_thread import ScenePreparationThread
from threads.worker_pool import WorkerPool
from utils.constants import DEFAULT_K, DEFAULT_THRESHOLD, LOSS_CSV_COLUMNS
from utils.errors import EmptyDatasetError, NumericError, TrainingDivergedError
from utils.logger import logger


@dataclass
class TrainingScene:
    """학습용 장면 + 미리 수집한 이웃 (기하는 고정, 색만 교란)"""
    sample: SceneSample
    gathered: GatherResult
    candidates: np.ndarray        # 이웃이 있는 텍셀 번호 (gathered 순서)
    targets: np.ndarray           # gathered 텍셀 순서의 정답 색 [T, 3]
    baseline: np.ndarray          # 깨끗한 뷰의 정면 베이스라인 색 [T, 3] (빈 텍셀은 검정)

    @property
    def name(self) -> str:
        return self.sample.name


@dataclass
class TrainResult:
    weights: NetWeights
    best_weights: NetWeights
    best_epoch: int
    loss_curve: List[Tuple[int, int, float]] = field(default_factory=list)
    epoch_losses: List[float] = field(default_factory=list)
    holdout_l1: List[float] = field(default_factory=list)


# ============================================================
# 데이터셋
# ============================================================

def to_training_scene(sample: SceneSample, K: int, use_geodesics: bool = True,
                      workers: int = 1) -> TrainingScene:
    gathered = gather_neighborhoods(sample.texel_map, sample.views, sample.geo, K,
                                    use_geodesics=use_geodesics, workers=workers)
    candidates = np.nonzero(gathered.nonempty())[0]
    targets = sample.target.colors[gathered.texel_rows, gathered.texel_cols]
    baseline = baseline_colors(sample, sample.views, gathered)
    return TrainingScene(sample, gathered, candidates, targets, baseline)


def baseline_colors(sample: SceneSample, views: Sequence[ViewBundle], gathered: GatherResult) -> np.ndarray:
    """정면 베이스라인 역투영 색 (gathered 텍셀 순서)"""
    texture = backproject_frontfacing(sample.texel_map, views)
    return texture.colors[gathered.texel_rows, gathered.texel_cols]


def prepare_dataset(specs: Sequence[Tuple[str, str, int]], cfg: TrainConfig,
                    workers: int = 1,
                    progress_callback: Optional[Callable[[int, int, str], None]] = None) -> List[TrainingScene]:
    """(kind, pattern, seed) 명세 목록 → 학습 장면 (백그라운드 스레드, 장면 단위 병렬)"""

    def build(spec) -> TrainingScene:
        kind, pattern, seed = spec
        sample = make_synthetic_scene(kind, pattern, cfg.texture_size, seed, cfg.view_resolution,
                                      geodesics=cfg.use_geodesics, radius=cfg.geodesic_radius)
        return to_training_scene(sample, cfg.K, cfg.use_geodesics)

    thread = ScenePreparationThread(specs, build, workers, progress_callback=progress_callback)
    thread.start()
    scenes = thread.wait()
    logger.info(f"학습 장면 {len(scenes)}개 준비 완료")
    return scenes


# ============================================================
# 학습
# ============================================================

def _epoch_items(scenes: Sequence[TrainingScene], cfg: TrainConfig, rng: np.random.Generator):
    """장면 에폭 하나의 학습 항목 [(gathered, 텍셀 번호, 정답 색, 현재 색)] - 섞인 순서

    seeded_fraction 확률로 현재 색을 같은 뷰의 정면 베이스라인 결과로 채운다 (반복 텍스처링 입력).
    나머지는 검정.
    """
    items = []
    lo, hi = cfg.augment_range
    for scene in scenes:
        if len(scene.candidates) == 0:
            continue
        gathered = scene.gathered
        views = None
        if rng.random() < cfg.augment_fraction:
            strength = float(rng.uniform(lo, hi))
            views = augment_views(scene.sample, strength, int(rng.integers(2 ** 31))).views
            gathered = gathered.with_colors(views)
        current = np.zeros_like(scene.targets)
        if rng.random() < cfg.seeded_fraction:
            current = scene.baseline if views is None else baseline_colors(scene.sample, views, gathered)
        count = min(cfg.texels_per_scene, len(scene.candidates))
        picked = np.sort(rng.choice(scene.candidates, size=count, replace=False))
        picked = picked[rng.permutation(count)]
        for start in range(0, count, cfg.texels_per_item):
            texels = picked[start:start + cfg.texels_per_item]
            items.append((gathered, texels, scene.targets[texels], current[texels]))
    order = rng.permutation(len(items))
    return [items[k] for k in order]


def _item_loss(w: NetWeights, item) -> Tuple[float, NetWeights]:
    gathered, texels, target, current = item
    batch = batch_from_gather(gathered, texels, current)
    return loss_and_grads(w, batch, target)


def _mean_grads(w: NetWeights, grads: Sequence[NetWeights]) -> NetWeights:
    """고정 순서로 합산한 평균 기울기"""
    total = {name: np.zeros_like(value) for name, value in w}
    for g in grads:
        for name, value in g:
            total[name] += value
    return NetWeights(w.arch, {name: value / len(grads) for name, value in total.items()})


def holdout_l1(w: NetWeights, scenes: Sequence[TrainingScene]) -> float:
    """평가 장면 전체 텍셀의 평균 L1 (깨끗한 뷰)"""
    errors = []
    for scene in scenes:
        if len(scene.candidates) == 0:
            continue
        pred = predict_gather(w, scene.gathered, scene.candidates, np.zeros((len(scene.candidates), 3)))
        errors.append(float(np.abs(pred - scene.targets[scene.candidates]).mean()))
    return float(np.mean(errors)) if errors else float('nan')


def write_loss_curve(curve: Sequence[Tuple[int, int, float]], path: Union[str, Path]):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(LOSS_CSV_COLUMNS)
        for epoch, step, loss in curve:
            writer.writerow([epoch, step, repr(float(loss))])


def train(dataset: Sequence[TrainingScene], cfg: TrainConfig, output_dir: Optional[Union[str, Path]] = None,
          holdout: Optional[Sequence[TrainingScene]] = None, weights: Optional[NetWeights] = None,
          max_steps: Optional[int] = None,
          status_callback: Optional[Callable[[str], None]] = None) -> TrainResult:
    """미니배치 Adam 학습

    Args:
        dataset: 학습 장면
        cfg: 학습 설정
        output_dir: 지정하면 loss_curve.csv, epoch_XXX.stxw, final.stxw, best.stxw 저장
        holdout: 최적 체크포인트 선택용 장면 (없으면 에폭 평균 학습 손실 기준)
        weights: 시작 가중치 (없으면 cfg.seed 로 초기화)
        max_steps: 전체 스텝 상한 (빠른 확인용)

    Raises:
        EmptyDatasetError: 학습 장면 없음
        TrainingDivergedError: 손실/가중치가 유한하지 않음 (마지막 정상 가중치 포함)
    """
    if not dataset:
        raise EmptyDatasetError("학습 데이터셋이 비어 있습니다")
    rng = np.random.default_rng(cfg.seed)
    w = weights if weights is not None else init_weights(NetArch(share_qkv=cfg.share_qkv), cfg.seed)
    opt = Adam(w, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    result = TrainResult(w, w, 0)
    best_score = float('inf')
    step = 0
    with WorkerPool(cfg.workers) as pool:
        for epoch in range(1, cfg.epochs + 1):
            items = _epoch_items(dataset, cfg, rng)
            if not items:
                raise EmptyDatasetError("이웃이 있는 학습 텍셀이 없습니다")
            losses = []
            for start in range(0, len(items), cfg.batch_size):
                if max_steps is not None and step >= max_steps:
                    break
                group = items[start:start + cfg.batch_size]
                try:
                    parts = pool.map(lambda item: _item_loss(w, item), group)
                except NumericError as e:
                    _save_failure(out, w)
                    raise TrainingDivergedError(f"{epoch} 에폭 {step} 스텝에서 발산: {e}", last_good=w, step=step)
                loss = float(np.mean([p[0] for p in parts]))
                updated = opt.step(w, _mean_grads(w, [p[1] for p in parts]))
                if not np.isfinite(loss) or not updated.is_finite():
                    _save_failure(out, w)
                    raise TrainingDivergedError(f"{epoch} 에폭 {step} 스텝에서 발산 (loss={loss})",
                                                last_good=w, step=step)
                w = updated
                step += 1
                losses.append(loss)
                result.loss_curve.append((epoch, step, loss))

            epoch_loss = float(np.mean(losses)) if losses else float('nan')
            result.epoch_losses.append(epoch_loss)
            score = epoch_loss
            if holdout:
                score = holdout_l1(w, holdout)
                result.holdout_l1.append(score)
            if score < best_score:
                best_score = score
                result.best_weights = w
                result.best_epoch = epoch
            if out is not None:
                save_weights(w, out / f'epoch_{epoch:03d}.stxw')
            message = f"에폭 {epoch}/{cfg.epochs}: 학습 손실 {epoch_loss:.5f}" + (
                f", 평가 L1 {score:.5f}" if holdout else '')
            logger.info(message)
            if status_callback:
                status_callback(message)
            if max_steps is not None and step >= max_steps:
                break

    result.weights = w
    if out is not None:
        save_weights(w, out / 'final.stxw')
        save_weights(result.best_weights, out / 'best.stxw')
        write_loss_curve(result.loss_curve, out / 'loss_curve.csv')
        logger.info(f"학습 결과 저장: {out}")
    return result


def _save_failure(out: Optional[Path], w: NetWeights):
    if out is not None:
        save_weights(w, out / 'last_good.stxw')


# ============================================================
# 평가
# ============================================================

def holdout_eval(weights: Optional[NetWeights], dataset: Sequence[SceneSample], K: int = DEFAULT_K,
                 thr: float = DEFAULT_THRESHOLD, use_geodesics: bool = True, workers: int = 1,
                 eval_cameras=None, textures_out: Optional[list] = None) -> List[Dict]:
    """학습에 쓰지 않은 장면에서 neural 과 베이스라인 3종 비교 (장면당 4행, 가중치가 없으면 3행)"""
    if not dataset:
        raise EmptyDatasetError("평가 데이터셋이 비어 있습니다")
    rows = []
    for sample in dataset:
        rows.extend(evaluate_scene(sample, weights, thr=thr, K=K, use_geodesics=use_geodesics,
                                   workers=workers, eval_cameras=eval_cameras,
                                   textures_out=textures_out))
    return rows


def smoothed(values: Sequence[float], window: int = 10) -> np.ndarray:
    """이동 평균 (손실 곡선 점검용)"""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < window:
        return values.copy()
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode='valid')
