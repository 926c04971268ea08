import logging
import math
import sys
from pathlib import Path
from typing import Any, List, Sequence

import numpy as np

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose: bool = False) -> None:
    """One stderr handler on the root logger; -v switches to DEBUG."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def ensure_dir(path: Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def to_jsonable(value: Any) -> Any:
    """numpy scalars/arrays and tuples to plain JSON types; non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def growth_factors(values: Sequence[float]) -> List[float]:
    """Consecutive ratios v[i+1]/v[i]; inf where v[i] is 0 and v[i+1] is not."""
    out = []
    for before, after in zip(values, values[1:]):
        if before == 0:
            out.append(1.0 if after == 0 else math.inf)
        else:
            out.append(after / before)
    return out


def spread(values: Sequence[float]) -> float:
    """(max - min) / min; 0 for an empty or all-zero sequence."""
    if not values:
        return 0.0
    lo, hi = min(values), max(values)
    if lo <= 0:
        return 0.0 if hi == lo else math.inf
    return (hi - lo) / lo
