"""
학습용 장면 준비 스레드
(메쉬 생성, 뷰 렌더링, 지오데식 캐시 계산을 백그라운드에서 수행)
"""
import threading
from typing import Any, Callable, List, Optional, Sequence

from threads.worker_pool import WorkerPool
from utils.logger import logger


class ScenePreparationThread(threading.Thread):
    """장면 일괄 준비 스레드

    builder(spec) 를 각 장면 명세에 적용한다. 결과는 명세 순서를 유지한다.
    """

    def __init__(self, specs: Sequence[Any], builder: Callable[[Any], Any], workers: int = 1,
                 progress_callback: Optional[Callable[[int, int, str], None]] = None,
                 status_callback: Optional[Callable[[str], None]] = None):
        super().__init__(daemon=True)
        self.specs = list(specs)
        self.builder = builder
        self.workers = workers
        self.progress_callback = progress_callback
        self.status_callback = status_callback
        self.results: List[Any] = []
        self.error: Optional[BaseException] = None
        self._pool: Optional[WorkerPool] = None
        self._is_cancelled = False
        self._done = 0
        self._lock = threading.Lock()

    def cancel(self):
        """준비 취소"""
        self._is_cancelled = True
        if self._pool is not None:
            self._pool.cancel()

    def _status(self, message: str):
        if self.status_callback:
            self.status_callback(message)

    def _build(self, spec):
        result = self.builder(spec)
        with self._lock:
            self._done += 1
            done = self._done
        if self.progress_callback:
            self.progress_callback(done, len(self.specs), str(spec))
        return result

    def run(self):
        """스레드 실행"""
        self._status(f"장면 {len(self.specs)}개 준비 중...")
        try:
            with WorkerPool(self.workers) as pool:
                self._pool = pool
                if self._is_cancelled:
                    pool.cancel()
                self.results = pool.map(self._build, self.specs)
            if self._is_cancelled:
                logger.info("장면 준비가 취소되었습니다.")
            else:
                self._status("장면 준비 완료")
        except BaseException as e:
            logger.error(f"장면 준비 실패: {e}")
            self.error = e
        finally:
            self._pool = None

    def wait(self) -> List[Any]:
        """스레드 종료 대기 후 결과 반환 (오류는 다시 발생)"""
        self.join()
        if self.error is not None:
            raise self.error
        return self.results
