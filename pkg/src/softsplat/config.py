"""Runtime configuration shared by the CLI subcommands.

Precedence, highest first: explicit command-line flags, then SOFTSPLAT_*
environment variables, then built-in defaults.  Defaults: mode softmax,
alpha -1, times (0.5,), workers 1, single precision everywhere except the
gradient checker, which defaults to double.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from .errors import InvalidArgumentError
from .grids import PRECISION_DTYPES
from .warp import MODES

ENV_PREFIX = "SOFTSPLAT_"
DEFAULT_MODE = "softmax"
DEFAULT_ALPHA = -1.0
DEFAULT_TIMES = (0.5,)
DEFAULT_WORKERS = 1


@dataclass(frozen=True)
class CliConfig:
    """Resolved knobs common to the subcommands."""

    mode: str = DEFAULT_MODE
    alpha: float = DEFAULT_ALPHA
    times: tuple = DEFAULT_TIMES
    precision: str = "single"
    workers: int = DEFAULT_WORKERS
    backend: str = None


def parse_times(text):
    """Parse a comma-separated list of time stations into a float tuple."""
    try:
        times = tuple(float(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError as exc:
        raise InvalidArgumentError(f"could not parse times from {text!r}") from exc
    if not times:
        raise InvalidArgumentError(f"no time stations found in {text!r}")
    for t in times:
        if not math.isfinite(t):
            raise InvalidArgumentError(f"time stations must be finite, got {t!r}")
    return times


def _env(name):
    return os.environ.get(ENV_PREFIX + name)


def _pick(cli_value, env_name, default, convert):
    if cli_value is not None:
        return cli_value
    raw = _env(env_name)
    if raw is not None:
        try:
            return convert(raw)
        except InvalidArgumentError:
            raise
        except (TypeError, ValueError) as exc:
            raise InvalidArgumentError(
                f"invalid {ENV_PREFIX}{env_name} value {raw!r}: {exc}"
            ) from exc
    return default


def resolve_config(args=None, *, for_gradcheck=False):
    """Merge CLI flags, environment, and defaults into a CliConfig.

    `args` is any object with optional attributes mode/alpha/t/precision/
    workers/backend (an argparse namespace qualifies); missing or None
    attributes fall through to the environment and then the defaults.
    """
    get = lambda name: getattr(args, name, None) if args is not None else None
    default_precision = "double" if for_gradcheck else "single"

    mode = _pick(get("mode"), "MODE", DEFAULT_MODE, str)
    alpha = float(_pick(get("alpha"), "ALPHA", DEFAULT_ALPHA, float))
    times = _pick(get("t"), "T", DEFAULT_TIMES, parse_times)
    if isinstance(times, str):
        times = parse_times(times)
    elif isinstance(times, (int, float)):
        times = (float(times),)
    precision = _pick(get("precision"), "PRECISION", default_precision, str)
    workers = int(_pick(get("workers"), "WORKERS", DEFAULT_WORKERS, int))
    backend = _pick(get("backend"), "BACKEND", None, str)

    if mode not in MODES:
        raise InvalidArgumentError(f"unknown mode {mode!r}; expected one of {MODES}")
    if precision not in PRECISION_DTYPES:
        raise InvalidArgumentError(
            f"unknown precision {precision!r}; expected one of {tuple(PRECISION_DTYPES)}"
        )
    if not math.isfinite(alpha):
        raise InvalidArgumentError(f"alpha must be finite, got {alpha!r}")
    if workers < 1:
        raise InvalidArgumentError(f"workers must be a positive integer, got {workers}")
    return CliConfig(mode=mode, alpha=alpha, times=tuple(float(t) for t in times),
                     precision=precision, workers=workers, backend=backend)
