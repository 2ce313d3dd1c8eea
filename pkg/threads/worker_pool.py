"""
작업자 풀

--workers N 으로 지정하는 모든 내부 병렬 처리의 공통 진입점
- N <= 1 : 현재 스레드에서 순차 실행 (재현성 모드)
- N > 1  : 스레드 풀, 결과는 항상 입력 순서대로 반환
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional

from utils.logger import logger


class WorkerPool:
    """순서 보존 map 을 제공하는 작업자 풀"""

    def __init__(self, workers: int = 1, status_callback: Optional[Callable[[str], None]] = None):
        self.workers = max(1, int(workers or 1))
        self.status_callback = status_callback
        self._executor: Optional[ThreadPoolExecutor] = None
        self._is_cancelled = False

    def __enter__(self) -> 'WorkerPool':
        if self.workers > 1:
            self._executor = ThreadPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, exc_type, exc, tb):
        self.shutdown()
        return False

    def cancel(self):
        """남은 작업 취소"""
        self._is_cancelled = True

    @property
    def is_cancelled(self) -> bool:
        return self._is_cancelled

    def shutdown(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=self._is_cancelled)
            self._executor = None

    def _status(self, message: str):
        if self.status_callback:
            self.status_callback(message)

    def map(self, fn: Callable, items: Iterable) -> List:
        """fn 을 각 항목에 적용하고 입력 순서대로 결과 반환"""
        items = list(items)
        if self._executor is None:
            results = []
            for k, item in enumerate(items, 1):
                if self._is_cancelled:
                    logger.info("작업이 취소되었습니다.")
                    break
                results.append(fn(item))
                self._status(f"[{k}/{len(items)}] 완료")
            return results

        futures = [self._executor.submit(fn, item) for item in items]
        results = []
        for k, future in enumerate(futures, 1):
            results.append(future.result())
            self._status(f"[{k}/{len(items)}] 완료")
        return results


def parallel_map(fn: Callable, items: Iterable, workers: int = 1) -> List:
    """WorkerPool 단축 함수"""
    with WorkerPool(workers) as pool:
        return pool.map(fn, items)
