import math
import os
from pathlib import Path
import tempfile
from typing import Any

SIG_DIGITS = 9


def atomic_write_text(path: Path, text: str) -> Path:
    """Write UTF-8 text with ``\\n`` newlines via a temp file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def round_sig(value: float, digits: int = SIG_DIGITS) -> float:
    return float(f"{value:.{digits}g}")


def jsonable(value: Any) -> Any:
    """Recursively convert numbers to 9-significant-digit floats and complex to ``{re, im}``.

    Non-finite floats become ``None`` so the output stays strict JSON.
    """
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, complex):
        return {"re": jsonable(value.real), "im": jsonable(value.imag)}
    if isinstance(value, float):
        return round_sig(value) if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [jsonable(v) for v in value]
    if getattr(value, "ndim", 0) > 0:
        return jsonable(value.tolist())
    if hasattr(value, "item"):
        return jsonable(value.item())
    if isinstance(value, Path):
        return value.as_posix()
    if hasattr(value, "value"):
        return jsonable(value.value)
    return str(value)
