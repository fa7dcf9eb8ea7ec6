#!/usr/bin/env python
""" Used to hold all common general-purpose functions and classes

    See the file "LICENSE" for the full license governing this code.
    Copyright 2021 Ken Farmer
"""
import logging
import math
from os.path import basename
import sys
import traceback
from typing import Optional, NoReturn



logger = logging.getLogger('stackpdn')

SECONDS_PER_YEAR = 3.1536e7

VERBOSITY_LEVELS = {'quiet': logging.WARNING,
                    'normal': logging.INFO,
                    'high': logging.INFO,
                    'debug': logging.DEBUG}



class PdnError(ValueError):
    """ Base of every error raised by the stackpdn modules.
    """
    kind = 'pdn-error'


class InvalidParamsError(PdnError):
    kind = 'invalid-params'


class DisconnectedNetError(PdnError):
    kind = 'disconnected-net'


class DegenerateGeometryError(PdnError):
    kind = 'degenerate-geometry'


class NegativeDeltaError(PdnError):
    kind = 'negative-delta'


class SingularSystemError(PdnError):
    kind = 'singular-system'


class NonConvergenceError(PdnError):
    kind = 'non-convergence'

    def __init__(self, msg: str, residual: float) -> None:
        super().__init__(f'{msg} (residual={residual:.3e})')
        self.residual = residual


class NonPositiveResistanceError(PdnError):
    kind = 'non-positive-resistance'


class UnachievableLevelError(PdnError):
    kind = 'unachievable-level'


class ZeroActiveTimeError(PdnError):
    kind = 'zero-active-time'


class ZeroNapsaaError(PdnError):
    kind = 'zero-napsaa'


class NonPositiveBaselineError(PdnError):
    kind = 'non-positive-baseline'


class ConfigError(PdnError):
    """ Config errors always name the offending line when there is one.
    """
    kind = 'config-error'

    def __init__(self, msg: str, line_no: Optional[int] = None) -> None:
        self.line_no = line_no
        if line_no is not None:
            msg = f'line {line_no}: {msg}'
        super().__init__(msg)


class UnknownKeyError(ConfigError):
    kind = 'unknown-key'


class TypeMismatchError(ConfigError):
    kind = 'type-mismatch'


class MissingWorkloadFileError(ConfigError):
    kind = 'missing-workload-file'



def configure_logging(verbosity: str = 'normal') -> logging.Logger:
    """ Points the package logger at stderr at the level implied by verbosity.

        Stdout is left alone since the commands print their results there.
    """
    level = VERBOSITY_LEVELS.get(verbosity, logging.INFO)
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter('%(asctime)s %(name)s %(levelname)s %(message)s'))
        logger.addHandler(handler)
    for handler in logger.handlers:
        handler.setLevel(level)
    return logger


def abort(summary: str,
          details: Optional[str] = None,
          rc: int = 1,
          verbosity: str = 'normal') -> NoReturn:
    """ Writes a one-line diagnostic to stderr then exits.
    """
    pgm = basename(sys.argv[0]) if sys.argv and sys.argv[0] else 'stackpdn'
    msg = f'{pgm}: error: {summary}'
    if details:
        msg += f': {details}'
    print(' '.join(msg.split('\n')), file=sys.stderr)

    if verbosity == 'debug':
        traceback.print_stack(file=sys.stderr)

    logger.debug(msg)
    sys.exit(rc)


def fmt_sig(value: float, digits: int = 6) -> str:
    """ Formats a number to a fixed count of significant digits.

        Infinite values print as 'inf' so that outputs stay parseable.
    """
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f'{value:.{digits}g}'


def fmt_sci(value: float) -> str:
    """ 6-significant-digit scientific notation, used by the timeline files.
    """
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f'{value:.5e}'


def fmt_mv(value: float) -> str:
    return f'{value:.2f}'


def fmt_years(value: Optional[float]) -> str:
    if value is None:
        return 'none'
    if math.isinf(value):
        return 'inf'
    return f'{value:.2f}'
