"""
Report Storage Manager
Writes experiment tables and summaries to an output directory atomically
"""
import os
import tempfile
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from utils.exceptions import DataValidationException, ReportStorageException
from utils.logger import setup_logger

logger = setup_logger(__name__)

Writer = Callable[[Path], None]


class ReportStorage:
    """Manages the report files of one experiment output directory"""

    def __init__(self, base_dir: Union[str, Path]):
        """
        Initialize report storage

        Args:
            base_dir: Output directory (created if missing)

        Raises:
            ReportStorageException: If the directory cannot be created
        """
        self.base_dir = Path(base_dir)
        try:
            self.base_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportStorageException(f"Cannot create output directory {self.base_dir}: {e}")
        logger.info(f"Report storage initialized at: {self.base_dir.absolute()}")

    def get_path(self, filename: str) -> Path:
        return self.base_dir / filename

    def _stage_path(self, filename: str) -> Path:
        fd, tmp = tempfile.mkstemp(prefix=f".{filename}.", suffix=".tmp", dir=self.base_dir)
        os.close(fd)
        return Path(tmp)

    def write_atomic(self, writers: Dict[str, Writer]) -> List[Path]:
        """
        Write several files so that either all of them land or none do

        Each writer fills a temporary file in the output directory; the
        temporaries are renamed into place only after every writer succeeded.
        Files they replace are moved aside first and restored if a later
        rename fails.

        Args:
            writers: filename -> function writing the content to a given path

        Returns:
            Final paths, in the order given

        Raises:
            ReportStorageException: If any file cannot be written
        """
        staged: List[Tuple[Path, Path]] = []
        replaced: List[Tuple[Path, Optional[Path]]] = []
        try:
            for filename, write in writers.items():
                tmp = self._stage_path(filename)
                staged.append((tmp, self.get_path(filename)))
                write(tmp)
            for tmp, final in staged:
                backup = None
                if final.exists():
                    backup = self._stage_path(final.name)
                    os.replace(final, backup)
                replaced.append((final, backup))
                os.replace(tmp, final)
        except Exception as e:
            self._roll_back(replaced)
            for tmp, _ in staged:
                if tmp.exists():
                    tmp.unlink()
            logger.error(f"Failed to write report files to {self.base_dir}: {e}")
            raise ReportStorageException(f"Failed to write report files to {self.base_dir}: {e}")

        for _, backup in replaced:
            if backup is not None:
                backup.unlink()
        paths = [final for _, final in staged]
        logger.info(f"Wrote {len(paths)} report files: {', '.join(p.name for p in paths)}")
        return paths

    @staticmethod
    def _roll_back(replaced: List[Tuple[Path, Optional[Path]]]) -> None:
        """Put the previous files back (or remove new ones) in reverse order"""
        for final, backup in reversed(replaced):
            try:
                if backup is not None:
                    os.replace(backup, final)
                elif final.exists():
                    final.unlink()
            except OSError as e:
                logger.error(f"Could not restore {final.name}: {e}")

    @staticmethod
    def csv_writer(df: pd.DataFrame, columns: Optional[Sequence[str]] = None) -> Writer:
        """Writer for a DataFrame; an empty frame still gets its header"""
        frame = df if columns is None else df.reindex(columns=list(columns))

        def write(path: Path) -> None:
            frame.to_csv(path, index=False)

        return write

    @staticmethod
    def text_writer(text: str) -> Writer:
        def write(path: Path) -> None:
            path.write_text(text, encoding="utf-8")

        return write

    def load_csv(self, filename: str, required_columns: Sequence[str] = ()) -> Optional[pd.DataFrame]:
        """
        Load a previously written report table

        Returns:
            DataFrame if the file exists, None otherwise

        Raises:
            DataValidationException: If required columns are missing
        """
        csv_path = self.get_path(filename)
        if not csv_path.exists():
            logger.info(f"Report file does not exist: {csv_path}")
            return None

        df = pd.read_csv(csv_path)
        missing = set(required_columns) - set(df.columns)
        if missing:
            raise DataValidationException(f"Report {csv_path.name} missing columns: {sorted(missing)}")
        logger.info(f"Loaded {len(df)} rows from: {csv_path.name}")
        return df

    def get_storage_stats(self) -> dict:
        files = [f for f in self.base_dir.iterdir() if f.is_file() and not f.name.startswith(".")]
        total_size = sum(f.stat().st_size for f in files)
        return {
            "total_files": len(files),
            "total_size_kb": total_size / 1024,
            "files": sorted(f.name for f in files),
            "base_dir": str(self.base_dir.absolute()),
        }

    def print_storage_summary(self):
        """Print a summary of the output directory"""
        stats = self.get_storage_stats()

        print("\n" + "=" * 70)
        print("📁 REPORT SUMMARY")
        print("=" * 70)
        print(f"Location:     {stats['base_dir']}")
        print(f"Total Files:  {stats['total_files']}")
        print(f"Total Size:   {stats['total_size_kb']:.1f} KB")
        for name in stats["files"]:
            print(f"  • {name}")
        print("=" * 70)
