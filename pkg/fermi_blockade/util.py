from typing import Dict, Any, Callable, Iterable, List, TypeVar
import os
import json
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor

from .errors import DomainError


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "FERMI_BLOCKADE_THREADS"
SIGNIFICANT_DIGITS = 9


def dget(obj, *args):
    if args:
        return dget(obj.get(args[0]), *args[1:])
    else:
        return obj


def recurse_dict(jdict: Any,
                 pred: Callable[[str, Any], bool],
                 repl: Callable[[str, Any], Any]) -> Any:
    """Recurse over a :class:`dict` or :class:`list` and perform replacement.

    Values are replaced in place wherever `pred` holds. Lists are entered
    with the key of the list they belong to.

    Args:
        jdict: A dictionary or list
        pred: Predicate to check when to perform replacement
        repl: Function which performs the replacement

    Returns:
        The modified structure

    """
    if isinstance(jdict, dict):
        for k, v in jdict.items():
            if pred(k, v):
                jdict[k] = repl(k, v)
            elif isinstance(v, (dict, list)):
                jdict[k] = recurse_dict(v, pred, repl)
    elif isinstance(jdict, list):
        for i, item in enumerate(jdict):
            if isinstance(item, (dict, list)):
                jdict[i] = recurse_dict(item, pred, repl)
            elif pred("", item):
                jdict[i] = repl("", item)
    return jdict


def format_float(value: float) -> str:
    """Format a float with :data:`SIGNIFICANT_DIGITS` significant digits."""
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"


def round_floats(jdict: Dict[str, Any]) -> Dict[str, Any]:
    """Round every float in a nested structure to :data:`SIGNIFICANT_DIGITS`.

    Keeps the JSON outputs byte-stable across platforms whose last-digit
    rounding differs.

    """
    def pred(k, v):
        return isinstance(v, float)

    def repl(k, v):
        return float(format_float(v))
    return recurse_dict(jdict, pred, repl)


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def thread_count() -> int:
    """Worker count from the environment, defaults to one."""
    value = os.environ.get(THREADS_ENV)
    if value is None or value == "":
        return 1
    try:
        count = int(value)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    if count < 1:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return count


def parallel_map(func: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Map `func` over `items` preserving order.

    Runs serially for a single worker so that tracebacks stay simple. Threads
    only pay off where `func` spends its time in numpy; the `scipy.integrate.quad`
    integrands are Python callbacks that hold the GIL, so quadrature sweeps
    gain little beyond overlapping their numpy setup.

    """
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [func(x) for x in items]
    logger.debug(f"Mapping {len(items)} items over {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
