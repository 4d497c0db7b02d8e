"""Output directory session; files are staged and moved into place on commit, manifest last."""
import logging
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Union

from .config import MANIFEST_NAME

logger = logging.getLogger(__name__)


class OutputSession:
    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.staging: Path = None
        self.outputs: List[str] = []

    def open(self) -> 'OutputSession':
        self.out_dir.parent.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}-", dir=self.out_dir.parent))
        return self

    def path(self, name: str) -> Path:
        """Staging path for output `name`; the name is recorded for the manifest."""
        if name not in self.outputs:
            self.outputs.append(name)
        target = self.staging / name
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def commit(self, manifest_text: str) -> List[Path]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        # A previous manifest would vouch for files that are about to change.
        (self.out_dir / MANIFEST_NAME).unlink(missing_ok=True)
        written = []
        for name in self.outputs:
            target = self.out_dir / name
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(self.staging / name), str(target))
            written.append(target)
        (self.out_dir / MANIFEST_NAME).write_text(manifest_text)
        self.close()
        logger.info("Committed %d outputs to %s", len(written), self.out_dir)
        return written

    def rollback(self) -> None:
        logger.info("Discarding staged outputs for %s", self.out_dir)
        self.close()

    def close(self) -> None:
        if self.staging is not None:
            shutil.rmtree(self.staging, ignore_errors=True)
            self.staging = None


@contextmanager
def get_session(out_dir: Union[str, Path]) -> Iterator[OutputSession]:
    """Yield an open session; anything left uncommitted is rolled back."""
    session = OutputSession(out_dir).open()
    try:
        yield session
    except BaseException:
        session.rollback()
        raise
    finally:
        session.close()
