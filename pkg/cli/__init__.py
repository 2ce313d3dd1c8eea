"""
명령행 인터페이스 패키지

    python main.py --seed 7 --workers 1 prepare mesh.obj --out work/prepared
"""
from .main import main
from .parser import build_parser

__all__ = ['main', 'build_parser']
