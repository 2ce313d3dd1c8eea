"""
예외 정의 모듈

[분류]
- UsageError    : 잘못된 인자/설정 (종료 코드 2)
- DataError     : 입력 데이터 문제 (종료 코드 3)
- NumericError  : 수치 실패 (종료 코드 4)
"""
from utils.constants import EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE


class TexelFusionError(Exception):
    """패키지 공통 예외"""
    exit_code = EXIT_DATA


class UsageError(TexelFusionError):
    """잘못된 사용법 또는 설정"""
    exit_code = EXIT_USAGE


class DataError(TexelFusionError):
    """입력 데이터 오류"""
    exit_code = EXIT_DATA


class AtlasRequiredError(DataError):
    """UV 좌표가 없는 메쉬"""


class MeshIndexError(DataError):
    """범위를 벗어난 면 인덱스"""


class DegenerateExtentError(DataError):
    """모든 정점이 한 점에 모인 메쉬"""


class DegenerateFaceError(DataError):
    """넓이가 0인 면에서의 질의"""


class BehindCameraError(DataError):
    """카메라 뒤(또는 near 평면 앞)에 있는 점"""


class FormatError(DataError):
    """바이너리/JSON 파일 형식 오류"""


class ScheduleError(DataError):
    """알 수 없는 뷰를 참조하는 스케줄"""


class DimensionMismatchError(DataError):
    """텍스처/이미지 크기 불일치"""


class EmptyNeighborhoodError(DataError):
    """이웃 픽셀이 없는 텍셀 (인페인팅 대상)"""


class InpaintError(DataError):
    """채워진 텍셀이 하나도 없는 텍스처"""


class EmptyDatasetError(DataError):
    """빈 데이터셋"""


class NumericError(TexelFusionError):
    """수치 계산 실패"""
    exit_code = EXIT_NUMERIC


class TrainingDivergedError(NumericError):
    """학습 손실이 NaN/Inf로 발산"""

    def __init__(self, message: str, last_good=None, step: int = -1):
        super().__init__(message)
        self.last_good = last_good
        self.step = step
