"""
상수 정의 모듈
멀티뷰 이미지 → UV 텍스처 역투영 파이프라인의 기본값 모음

기준:
- 텍스처 아틀라스: H = W = 1024 (데스크 규모 실험에서는 128~256 사용)
- 신경 역투영: 특징 차원 D = 64, 어텐션 블록 3개, 이웃 크기 K = 3
- 학습: 배치 4, 10 에폭, L1 손실
"""
import math

# ============================================================
# 텍스처 / 아틀라스
# ============================================================
DEFAULT_TEXTURE_SIZE = 1024
DESK_TEXTURE_SIZE = 128
BARYCENTRIC_TOLERANCE = 1e-6
DEGENERATE_AREA = 1e-12

# 텍스처가 비어 있는 텍셀의 색 (검정 규약)
EMPTY_COLOR = (0.0, 0.0, 0.0)
# 렌더링 시 유효하지 않은 텍셀을 가리키는 디버그 색
INVALID_TEXEL_COLOR = (1.0, 0.0, 1.0)
# 렌더링용 여백(gutter) 확장 텍셀 수
GUTTER_PADDING = 2

# ============================================================
# 카메라 / 래스터라이저
# ============================================================
DEFAULT_FOV = math.radians(45.0)
DEFAULT_CAMERA_DISTANCE = 2.0
DEFAULT_NEAR = 0.1
DEFAULT_FAR = 10.0
DEFAULT_VIEW_RESOLUTION = 512
DESK_VIEW_RESOLUTION = 128
DEFAULT_UP = (0.0, 1.0, 0.0)

# 6시점 프리셋 (방위각, 고도) - 전/후, 좌/우, 상/하
SIX_VIEW_PRESET = [
    (0.0, 0.0),                     # front
    (math.pi, 0.0),                 # back
    (math.radians(90.0), 0.0),      # left
    (math.radians(270.0), 0.0),     # right
    (0.0, math.radians(89.0)),      # top
    (0.0, math.radians(-89.0)),     # bottom
]
SIX_VIEW_NAMES = ['front', 'back', 'left', 'right', 'top', 'bottom']

# 반복 텍스처링 스케줄 (뷰 인덱스 그룹)
SCHEDULE_PRESETS = {
    'paint3d': [[0, 1], [2, 3], [4, 5]],
    'single': [[0, 1, 2, 3, 4, 5]],
}

# 평가용 고정 시점 수와 고도 패턴
EVAL_VIEW_COUNT = 20
EVAL_ELEVATIONS = [math.radians(30.0), math.radians(-15.0)]

# ============================================================
# 지오데식
# ============================================================
GEODESIC_RADIUS = 0.15
GEODESIC_QUANTIZATION = 64

# ============================================================
# 이웃 수집 / 역투영
# ============================================================
DEFAULT_K = 3
VISIBILITY_EPSILON = 1e-3
DEFAULT_THRESHOLD = 0.1
DEFAULT_WEIGHT_POWER = 1.0
# 텍셀 자신의 n·v 값 (가장 정면을 향하는 센티넬)
TEXEL_NDOTV_SENTINEL = 1.0
STRATEGIES = ['frontfacing', 'average', 'weighted', 'neural']
BASELINE_STRATEGIES = ['frontfacing', 'average', 'weighted']

# ============================================================
# 신경망 구조
# ============================================================
FEATURE_DIM = 64
HIDDEN_DIM = 64
ATTENTION_BLOCKS = 3
POS_FEATURES = 8     # rel_pos(3) + rel_normal(3) + ndotv(1) + geodesic(1)
APP_FEATURES = 3
OUT_CHANNELS = 3
ACTIVATION_SOFTPLUS = 1
DECODER_OUTPUT_SCALE = 0.1

# ============================================================
# 학습
# ============================================================
DEFAULT_BATCH_SIZE = 4
DEFAULT_EPOCHS = 10
DEFAULT_LEARNING_RATE = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
AUGMENT_RANGE = (0.2, 0.7)
AUGMENT_FRACTION = 0.5
# 현재 색을 이전 역투영 결과로 채운 학습 장면 비율 (나머지는 검정)
SEEDED_FRACTION = 0.5
TEXELS_PER_SCENE = 4096
TEXELS_PER_ITEM = 128
DEFAULT_SEED = 7
# 평가 장면 시드 시작값 (학습 장면 시드와 겹치지 않게)
HOLDOUT_SEED = 1000

SCENE_KINDS = ['sphere', 'torus', 'cube', 'capsule']
PATTERNS = ['checker', 'stripes', 'noise', 'gradient']
# 증강 시 저주파 색 왜곡의 평균 크기 (강도 1 기준)
AUGMENT_WARP_MAGNITUDE = 0.2

# ============================================================
# 바이너리 포맷 (리틀 엔디언)
# ============================================================
TEXEL_MAP_MAGIC = b'STXM'
GBUFFER_MAGIC = b'STXG'
GEODESIC_MAGIC = b'STXD'
WEIGHTS_MAGIC = b'STXW'
TEXTURE_MAGIC = b'STXT'
FORMAT_VERSION = 1

# ============================================================
# 평가 / 리포트
# ============================================================
CSV_COLUMNS = [
    'scene', 'strategy', 'K', 'geodesics', 'thr',
    'L1', 'PSNR', 'seam_energy', 'coverage', 'wall_time_ms',
]
LOSS_CSV_COLUMNS = ['epoch', 'step', 'loss']
ABLATION_K_VALUES = [1, 3, 5, 7]

# ============================================================
# CLI 종료 코드
# ============================================================
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

CACHE_DIR_ENV = 'STX_CACHE_DIR'
