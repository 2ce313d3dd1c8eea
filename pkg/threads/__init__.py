"""
스레드 패키지
"""
from .worker_pool import WorkerPool, parallel_map
from .scene_thread import ScenePreparationThread

__all__ = ['WorkerPool', 'parallel_map', 'ScenePreparationThread']
