"""Path handling utilities."""

import os
import tempfile
from pathlib import Path
from typing import Union


def strip_quotes(path: Union[str, Path]) -> str:
    """Remove surrounding quotes (single or double) from a path string.

    Args:
        path: Path string that may have quotes

    Returns:
        Path string without quotes
    """
    path_str = str(path).strip()
    if (path_str.startswith('"') and path_str.endswith('"')) or \
       (path_str.startswith("'") and path_str.endswith("'")):
        return path_str[1:-1]
    return path_str


def expand_path(path: Union[str, Path, None]) -> Union[Path, None]:
    """Strip quotes and expand ~ and environment variables in a path.

    Returns:
        Expanded Path object, or None for None or an empty string
    """
    if path is None:
        return None
    path_str = strip_quotes(path)
    if not path_str:
        return None
    return Path(os.path.expanduser(os.path.expandvars(path_str)))


def atomic_write_text(path: Union[str, Path], text: str):
    """Write ``text`` to a temp file in the target directory, then rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
