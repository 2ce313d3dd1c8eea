"""
명령행 인자 정의 (argparse)

설정 파일(--config, JSON/TOML)의 값 위에 명시한 플래그만 덮어쓴다.
그래서 덮어쓰기 대상 플래그의 기본값은 모두 None 이다.
"""
import argparse
import json
from typing import Any, Dict, List, Optional, Union

from utils.constants import ABLATION_K_VALUES, EVAL_VIEW_COUNT, SCHEDULE_PRESETS, STRATEGIES
from utils.errors import UsageError

LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']

# 인자 이름 → PipelineConfig 필드
PIPELINE_FIELDS = [
    'mesh', 'texture_width', 'texture_height', 'views', 'view_count', 'camera_file',
    'view_resolution', 'strategy', 'K', 'thr', 'power', 'geodesic_radius', 'use_geodesics',
    'schedule', 'inpaint', 'weights', 'output_dir', 'seed', 'workers',
]
# 인자 이름 → TrainConfig 필드
TRAIN_FIELDS = [
    'batch_size', 'epochs', 'learning_rate', 'K', 'use_geodesics', 'geodesic_radius', 'seed',
    'scene_count', 'holdout_count', 'texture_size', 'view_resolution', 'share_qkv', 'output_dir',
    'workers',
]


def parse_schedule(text: str) -> Union[str, List[List[int]]]:
    """'paint3d' 같은 프리셋 이름 또는 '[[0,1],[2,3]]' 형태의 JSON"""
    if text in SCHEDULE_PRESETS:
        return text
    try:
        groups = json.loads(text)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(
            f"스케줄은 {', '.join(SCHEDULE_PRESETS)} 또는 JSON 목록이어야 합니다: {text}")
    if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
        raise argparse.ArgumentTypeError(f"스케줄 JSON 은 뷰 번호 목록의 목록이어야 합니다: {text}")
    return groups


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"쉼표로 구분한 정수 목록이어야 합니다: {text}")


def overrides(args: argparse.Namespace, names: List[str]) -> Dict[str, Any]:
    """None 이 아닌 인자만 dict 로"""
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def _add_texture_args(p: argparse.ArgumentParser):
    p.add_argument('--texture-size', type=int, default=None, help='텍스처 가로=세로 (기본 1024)')
    p.add_argument('--width', dest='texture_width', type=int, default=None)
    p.add_argument('--height', dest='texture_height', type=int, default=None)


def _add_view_args(p: argparse.ArgumentParser):
    p.add_argument('--cameras', dest='camera_file', default=None, help='카메라 JSON ({"cameras": [...]})')
    p.add_argument('--views', choices=['six', 'ring'], default=None, help='시점 프리셋')
    p.add_argument('--view-count', type=int, default=None, help='ring 시점 수')
    p.add_argument('--resolution', dest='view_resolution', type=int, default=None, help='시점 이미지 해상도')


def _add_strategy_args(p: argparse.ArgumentParser):
    p.add_argument('--strategy', choices=STRATEGIES, default=None)
    p.add_argument('--weights', default=None, help='STXW 가중치 (neural 전략)')
    p.add_argument('-K', '--K', dest='K', type=int, default=None, help='이웃 창 크기 (홀수)')
    p.add_argument('--thr', type=float, default=None, help='정면성 임계값 [-1, 1)')
    p.add_argument('--power', type=float, default=None, help='weighted 전략의 n·v 지수')
    p.add_argument('--radius', dest='geodesic_radius', type=float, default=None, help='지오데식 반경')
    p.add_argument('--no-geodesics', dest='use_geodesics', action='store_const', const=False, default=None)
    p.add_argument('--schedule', type=parse_schedule, default=None,
                   help=f"반복 텍스처링 스케줄 ({', '.join(SCHEDULE_PRESETS)} 또는 JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='texelfusion',
        description='멀티뷰 이미지 → UV 텍스처 역투영 (휴리스틱 베이스라인 + 학습형 어텐션 모듈)')
    parser.add_argument('--seed', type=int, default=None, help='모든 난수의 시드 (기본 7)')
    parser.add_argument('--workers', type=int, default=None, help='내부 병렬 작업 수 (1 = 재현 모드)')
    parser.add_argument('--log-level', choices=LOG_LEVELS, default=None)
    sub = parser.add_subparsers(dest='command', required=True)

    # prepare
    p = sub.add_parser('prepare', help='메쉬 정규화, 텍셀 맵, 아틀라스 보고서, 지오데식 캐시')
    p.add_argument('mesh', nargs='?', default=None, help='UV 가 있는 OBJ 메쉬')
    p.add_argument('--out', required=True, help='출력 폴더')
    p.add_argument('--config', default=None, help='PipelineConfig JSON/TOML')
    p.add_argument('--geodesics', action='store_true', help='유효 텍셀 전체의 지오데식 캐시 계산')
    p.add_argument('--radius', dest='geodesic_radius', type=float, default=None)
    _add_texture_args(p)

    # render-views
    p = sub.add_parser('render-views', help='외부 이미지 생성기용 깊이 PNG + G-버퍼')
    p.add_argument('--prepared', required=True, help='prepare 출력 폴더')
    p.add_argument('--out', required=True)
    p.add_argument('--config', default=None)
    _add_view_args(p)

    # backproject
    p = sub.add_parser('backproject', help='뷰 이미지 → 텍스처')
    p.add_argument('--prepared', required=True)
    p.add_argument('--manifest', required=True, help='views.json ({"views": [{"image", "camera"}]})')
    p.add_argument('--out', required=True)
    p.add_argument('--config', default=None)
    p.add_argument('--inpaint', action='store_const', const=True, default=None,
                   help='차트 내부 pull-push 로 빈 텍셀 채우기')
    _add_strategy_args(p)

    # train
    p = sub.add_parser('train', help='합성 장면으로 역투영 네트워크 학습')
    p.add_argument('--config', default=None, help='TrainConfig JSON/TOML')
    p.add_argument('--out', dest='output_dir', default=None)
    p.add_argument('--epochs', type=int, default=None)
    p.add_argument('--batch-size', type=int, default=None)
    p.add_argument('--lr', dest='learning_rate', type=float, default=None)
    p.add_argument('--scenes', dest='scene_count', type=int, default=None)
    p.add_argument('--holdout', dest='holdout_count', type=int, default=None)
    p.add_argument('--texture-size', type=int, default=None)
    p.add_argument('--resolution', dest='view_resolution', type=int, default=None)
    p.add_argument('-K', '--K', dest='K', type=int, default=None)
    p.add_argument('--radius', dest='geodesic_radius', type=float, default=None)
    p.add_argument('--no-geodesics', dest='use_geodesics', action='store_const', const=False, default=None)
    p.add_argument('--share-qkv', action='store_const', const=True, default=None)
    p.add_argument('--max-steps', type=int, default=None, help='전체 스텝 상한')

    # eval
    p = sub.add_parser('eval', help='평가 장면에서 전략 비교 / 절제')
    p.add_argument('--config', default=None, help='TrainConfig JSON/TOML (장면 크기, K, 시드)')
    p.add_argument('--out', required=True)
    p.add_argument('--weights', default=None)
    p.add_argument('--suite', choices=['strategies', 'ablation-k', 'ablation-geodesics'], default='strategies')
    p.add_argument('--scenes', dest='holdout_count', type=int, default=None)
    p.add_argument('--texture-size', type=int, default=None)
    p.add_argument('--resolution', dest='view_resolution', type=int, default=None)
    p.add_argument('-K', '--K', dest='K', type=int, default=None)
    p.add_argument('--k-values', type=parse_int_list, default=list(ABLATION_K_VALUES))
    p.add_argument('--thr', type=float, default=None)
    p.add_argument('--perturb', type=float, default=0.0, help='평가 뷰 교란 강도 [0, 1]')
    p.add_argument('--eval-views', type=int, default=EVAL_VIEW_COUNT)
    p.add_argument('--no-geodesics', dest='use_geodesics', action='store_const', const=False, default=None)
    p.add_argument('--train-per-setting', action='store_true', help='절제 설정마다 새로 학습')
    p.add_argument('--no-timing', action='store_true', help='wall_time_ms 를 0 으로 기록 (재현 비교용)')
    p.add_argument('--no-pdf', action='store_true')

    # pipeline
    p = sub.add_parser('pipeline', help='prepare → render-views → [외부] → backproject → inpaint → eval')
    p.add_argument('mesh', nargs='?', default=None)
    p.add_argument('--out', required=True)
    p.add_argument('--config', default=None)
    p.add_argument('--target-texture', default=None, help='알려진 텍스처 PNG 로 뷰를 합성 (왕복 모드)')
    p.add_argument('--no-timing', action='store_true')
    _add_texture_args(p)
    _add_view_args(p)
    _add_strategy_args(p)
    return parser


def apply_texture_size(args: argparse.Namespace):
    """--texture-size 를 가로/세로로 펼침 (개별 지정이 우선)"""
    size: Optional[int] = getattr(args, 'texture_size', None)
    if size is None:
        return
    if getattr(args, 'texture_width', None) is None:
        args.texture_width = size
    if getattr(args, 'texture_height', None) is None:
        args.texture_height = size


def check_global(args: argparse.Namespace):
    if args.workers is not None and args.workers < 1:
        raise UsageError(f"--workers 는 1 이상이어야 합니다: {args.workers}")
