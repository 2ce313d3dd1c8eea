#!/usr/bin/env python3
"""
TexelFusion - 멀티뷰 이미지 → UV 텍스처 역투영
엔트리 포인트
"""
import sys

from cli import main

if __name__ == '__main__':
    sys.exit(main())
