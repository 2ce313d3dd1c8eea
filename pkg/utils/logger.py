"""
로깅 설정 모듈
"""
import logging
import os
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _resolve_level(level: Optional[str]) -> int:
    """레벨 문자열을 logging 상수로 변환"""
    name = (level or os.environ.get('STX_LOG_LEVEL', 'INFO')).upper()
    return getattr(logging, name, logging.INFO)


def setup_logger(name: str = __name__, log_file: Optional[str] = None,
                 level: Optional[str] = None) -> logging.Logger:
    """로거 설정 및 반환

    Args:
        name: 로거 이름
        log_file: 로그 파일 경로 (None이면 STX_LOG_FILE 환경변수, 빈 문자열이면 파일 기록 안 함)
        level: 로그 레벨 이름 (None이면 STX_LOG_LEVEL 환경변수, 기본 INFO)
    """
    logger = logging.getLogger(name)

    if logger.handlers:
        return logger

    resolved = _resolve_level(level)
    logger.setLevel(resolved)

    formatter = logging.Formatter(LOG_FORMAT)

    # 콘솔 핸들러
    console_handler = logging.StreamHandler()
    console_handler.setLevel(resolved)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # 파일 핸들러 (선택)
    if log_file is None:
        log_file = os.environ.get('STX_LOG_FILE', '')
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(resolved)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def set_level(level: str):
    """기본 로거와 모든 핸들러의 레벨 변경 (CLI --log-level)"""
    resolved = _resolve_level(level)
    logger.setLevel(resolved)
    for handler in logger.handlers:
        handler.setLevel(resolved)


def get_logger(name: str = None) -> logging.Logger:
    """로거 가져오기 (setup_logger의 별칭)"""
    if name is None:
        return logger
    return setup_logger(name)


# 기본 로거
logger = setup_logger('TexelFusion')
