# fpu_lab/utils/helper_functions.py

import logging
import math
from typing import Union

from config import FLOAT_FORMAT

logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

MISSING_VALUE = "none"

def format_real(value: Union[float, int]) -> str:
    """
    Renders a float with 17 significant digits, which round-trips every 64-bit value exactly.

    Args:
        value (Union[float, int]): The number to render.

    Returns:
        str: e.g. 0.1 -> "0.10000000000000001"; "nan"/"inf" for non-finite values.
    """
    return FLOAT_FORMAT % float(value)

def format_optional_real(value: Union[float, int, None]) -> str:
    """Like format_real, but renders None as 'none' (used for absent T_eq values)."""
    if value is None:
        return MISSING_VALUE
    return format_real(value)

def parse_optional_real(text: str) -> float | None:
    """Inverse of format_optional_real."""
    text = text.strip()
    if text.lower() == MISSING_VALUE:
        return None
    return float(text)

def format_amplitude_tag(amplitude: Union[float, int]) -> str:
    """
    File-name-safe rendering of an amplitude: 40 -> 'A40', 2.5 -> 'A2p5'.

    Args:
        amplitude (Union[float, int]): Initial mode amplitude.

    Returns:
        str: The tag, without characters that are awkward in file names.
    """
    value = float(amplitude)
    if value.is_integer():
        text = str(int(value))
    else:
        text = repr(value).replace(".", "p").replace("-", "m").replace("+", "")
    return f"A{text}"

def format_number(value: Union[float, int, None], significant_digits: int = 4) -> str:
    """
    Short human-readable rendering for log lines and the summary report.

    Args:
        value (Union[float, int, None]): Number to format; None renders as 'none'.
        significant_digits (int): Number of significant digits.

    Returns:
        str: The formatted number string.
    """
    if value is None:
        return MISSING_VALUE
    try:
        if not math.isfinite(value):
            return str(value)
        return f"{value:.{significant_digits}g}"
    except (ValueError, TypeError) as e:
        logger.error(f"Error formatting number {value}: {e}")
        return "Error: Invalid Number"
