"""
기하 처리 패키지 (메쉬, 래스터라이저, 지오데식, 절차적 도형)
"""
from .mesh import (
    Mesh, TexelMap, AtlasReport,
    load_mesh, save_mesh, build_mesh, compute_normals, normalize_mesh, prepare_mesh,
    build_texel_map, build_atlas_report, chart_labels,
    save_texel_map, load_texel_map,
)
from .raster import (
    Camera, GBuffer, RenderResult,
    make_view_ring, make_eval_views, project, project_points,
    render_gbuffer, render_textured, save_gbuffer, load_gbuffer, depth_visualization,
)
from .geodesics import (
    SurfacePoint, EdgeGraph, GeodesicField, GeodesicCache,
    build_edge_graph, geodesic_field, geodesic_distance, precompute_texel_fields,
    save_geodesic_cache, load_geodesic_cache,
)
from .primitives import make_primitive

__all__ = [
    'Mesh', 'TexelMap', 'AtlasReport',
    'load_mesh', 'save_mesh', 'build_mesh', 'compute_normals', 'normalize_mesh', 'prepare_mesh',
    'build_texel_map', 'build_atlas_report', 'chart_labels', 'save_texel_map', 'load_texel_map',
    'Camera', 'GBuffer', 'RenderResult',
    'make_view_ring', 'make_eval_views', 'project', 'project_points',
    'render_gbuffer', 'render_textured', 'save_gbuffer', 'load_gbuffer', 'depth_visualization',
    'SurfacePoint', 'EdgeGraph', 'GeodesicField', 'GeodesicCache',
    'build_edge_graph', 'geodesic_field', 'geodesic_distance', 'precompute_texel_fields',
    'save_geodesic_cache', 'load_geodesic_cache',
    'make_primitive',
]
