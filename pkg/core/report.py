"""
평가 결과 리포트

- metrics.csv   : 전략 비교 / 절제 표 (결과가 없으면 헤더만)
- gallery/      : 장면·전략별 텍스처 PNG + 렌더 PNG
- summary.pdf   : 표와 썸네일을 담은 요약 (reportlab)
"""
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from reportlab.lib.pagesizes import A4
from reportlab.lib.utils import ImageReader
from reportlab.pdfbase import pdfmetrics
from reportlab.pdfbase.ttfonts import TTFont
from reportlab.pdfgen import canvas

from core.texture import Texture, pad_texture, save_texture_png
from geometry.mesh import Mesh
from geometry.raster import Camera, make_view_ring, render_textured
from utils.constants import CSV_COLUMNS
from utils.image_io import save_rgb
from utils.logger import logger


@dataclass
class GalleryEntry:
    scene: str
    strategy: str
    texture: Texture
    mesh: Mesh


def _fmt(value) -> str:
    if isinstance(value, float):
        return 'nan' if math.isnan(value) else f'{value:.6g}'
    return str(value)


def write_metrics_csv(rows: Sequence[Dict], path: Union[str, Path], timing: bool = True):
    """CSV_COLUMNS 순서로 저장 (timing=False 면 wall_time_ms 를 0 으로 기록)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            if not timing:
                row = {**row, 'wall_time_ms': 0}
            writer.writerow([_fmt(row.get(col, '')) for col in CSV_COLUMNS])
    logger.info(f"지표 CSV 저장: {path} ({len(rows)}행)")


def read_metrics_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    with open(path, 'r', newline='', encoding='utf-8') as f:
        return list(csv.DictReader(f))


def save_gallery(entries: Sequence[GalleryEntry], out_dir: Union[str, Path],
                 camera: Optional[Camera] = None) -> List[Path]:
    """장면/전략마다 텍스처와 정면 렌더 저장"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    camera = camera or make_view_ring(6, width=256, height=256)[0]
    written = []
    for entry in entries:
        stem = f'{entry.scene}_{entry.strategy}'
        tex_path = out_dir / f'{stem}_texture.png'
        render_path = out_dir / f'{stem}_render.png'
        save_texture_png(entry.texture, tex_path)
        render = render_textured(entry.mesh, pad_texture(entry.texture), camera)
        save_rgb(render_path, render.image)
        written += [tex_path, render_path]
    return written


def _register_font() -> str:
    """한글 폰트 등록 시도 - 실패하면 Helvetica"""
    for name, filename in (('Malgun', 'malgun.ttf'), ('NanumGothic', 'NanumGothic.ttf')):
        try:
            pdfmetrics.registerFont(TTFont(name, filename))
            return name
        except Exception:
            continue
    return 'Helvetica'


def write_summary_pdf(rows: Sequence[Dict], path: Union[str, Path], title: str = 'TexelFusion evaluation',
                      images: Sequence[Path] = ()):
    """지표 표와 갤러리 썸네일을 담은 PDF"""
    path = Path(path)
    font = _register_font()
    c = canvas.Canvas(str(path), pagesize=A4)
    width, height = A4
    y = height - 50

    c.setFont(font, 14)
    c.drawString(50, y, title)
    y -= 30

    c.setFont(font, 7)
    col_x = np.linspace(50, width - 60, len(CSV_COLUMNS), endpoint=False)
    for x, col in zip(col_x, CSV_COLUMNS):
        c.drawString(float(x), y, col)
    y -= 12
    for row in rows:
        if y < 50:
            c.showPage()
            c.setFont(font, 7)
            y = height - 50
        for x, col in zip(col_x, CSV_COLUMNS):
            c.drawString(float(x), y, _fmt(row.get(col, ''))[:14])
        y -= 11

    thumb = 120
    x = 50
    y -= thumb + 10
    for image in images:
        if y < 50:
            c.showPage()
            y = height - 50 - thumb
            x = 50
        c.drawImage(ImageReader(str(image)), x, y, thumb, thumb)
        c.setFont(font, 6)
        c.drawString(x, y - 8, Path(image).stem[:30])
        x += thumb + 10
        if x + thumb > width - 50:
            x = 50
            y -= thumb + 20
    c.save()
    logger.info(f"요약 PDF 저장: {path}")


def report(rows: Sequence[Dict], out_dir: Union[str, Path],
           gallery: Sequence[GalleryEntry] = (), title: str = 'TexelFusion evaluation',
           pdf: bool = True, timing: bool = True) -> Dict[str, Path]:
    """metrics.csv + gallery/ + summary.pdf"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {'csv': out_dir / 'metrics.csv'}
    write_metrics_csv(rows, paths['csv'], timing)
    images = save_gallery(gallery, out_dir / 'gallery') if gallery else []
    if pdf:
        paths['pdf'] = out_dir / 'summary.pdf'
        write_summary_pdf(rows, paths['pdf'], title, [p for p in images if p.name.endswith('_render.png')])
    return paths
