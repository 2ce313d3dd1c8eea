"""
CLI 진입점 - 인자 해석, 설정 조립, 서브커맨드 실행, 예외 → 종료 코드

종료 코드: 0 성공, 2 사용법 오류, 3 데이터 오류, 4 수치 실패
"""
import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from cli.commands import (
    cmd_backproject, cmd_eval, cmd_pipeline, cmd_prepare, cmd_render_views, cmd_train,
)
from cli.parser import (
    PIPELINE_FIELDS, TRAIN_FIELDS, apply_texture_size, build_parser, check_global, overrides,
)
from core.config import PipelineConfig, TrainConfig, read_mapping
from utils.constants import DEFAULT_THRESHOLD, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE
from utils.errors import TexelFusionError
from utils.logger import logger, set_level
from validators import ReferencedFilesValidator


def pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    """설정 파일 + 명시한 플래그 → PipelineConfig"""
    apply_texture_size(args)
    data = read_mapping(args.config) if getattr(args, 'config', None) else {}
    data.update(overrides(args, PIPELINE_FIELDS))
    return ReferencedFilesValidator().require(PipelineConfig.from_dict(data), 'PipelineConfig')


def train_config(args: argparse.Namespace) -> TrainConfig:
    data = read_mapping(args.config) if getattr(args, 'config', None) else {}
    data.update(overrides(args, TRAIN_FIELDS))
    return TrainConfig.from_dict(data)


def _run_prepare(args):
    cfg = pipeline_config(args)
    cmd_prepare(cfg, Path(args.out), geodesics=args.geodesics)


def _run_render_views(args):
    cmd_render_views(pipeline_config(args), Path(args.prepared), Path(args.out))


def _run_backproject(args):
    cmd_backproject(pipeline_config(args), Path(args.prepared), Path(args.manifest), Path(args.out))


def _run_train(args):
    cmd_train(train_config(args), max_steps=args.max_steps)


def _run_eval(args):
    cfg = train_config(args)
    cmd_eval(cfg, Path(args.out), args.weights, args.suite, args.perturb, args.k_values,
             args.thr if args.thr is not None else DEFAULT_THRESHOLD, args.eval_views,
             args.train_per_setting, timing=not args.no_timing, pdf=not args.no_pdf)


def _run_pipeline(args):
    cfg = pipeline_config(args)
    target = Path(args.target_texture) if args.target_texture else None
    cmd_pipeline(cfg, Path(args.out), target, timing=not args.no_timing)


HANDLERS: Dict[str, Callable[[argparse.Namespace], None]] = {
    'prepare': _run_prepare,
    'render-views': _run_render_views,
    'backproject': _run_backproject,
    'train': _run_train,
    'eval': _run_eval,
    'pipeline': _run_pipeline,
}


def main(argv: Optional[List[str]] = None) -> int:
    """CLI 실행 후 종료 코드 반환"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 는 사용법 오류에 2, --help 에 0 으로 종료한다
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    if args.log_level:
        set_level(args.log_level)

    try:
        check_global(args)
        HANDLERS[args.command](args)
        return EXIT_OK
    except TexelFusionError as e:
        logger.error(f"{args.command} 실패 [{type(e).__name__}]: {e}")
        return e.exit_code
    except FloatingPointError as e:
        logger.error(f"{args.command} 수치 오류: {e}")
        return EXIT_NUMERIC
    except OSError as e:
        # 출력 폴더 생성, 파일 쓰기 등 파일 시스템 오류
        logger.error(f"{args.command} 입출력 오류: {e}")
        return EXIT_DATA


if __name__ == '__main__':
    sys.exit(main())
