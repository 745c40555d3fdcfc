"""
Small parsing helpers for command arguments.
"""

from typing import List

from moment_gap.exceptions import InvalidArgumentError


def parse_int_range(text: str) -> List[int]:
    """
    Parse ``"4..30"``, ``"4..30:2"`` or ``"4,6,9"`` into a sorted list of integers.

    Parameters:
    text (str): The range expression.

    Returns:
    List[int]: The distinct values in increasing order.

    Raises:
    InvalidArgumentError: If the expression is malformed or empty.
    """
    values: set[int] = set()
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ".." in part:
                bounds, _, step = part.partition(":")
                low, high = (int(bound) for bound in bounds.split(".."))
                stride = int(step) if step else 1
                if stride <= 0 or high < low:
                    raise ValueError(part)
                values.update(range(low, high + 1, stride))
            else:
                values.add(int(part))
    except ValueError as exc:
        raise InvalidArgumentError(f"cannot parse integer range {text!r}") from exc
    if not values:
        raise InvalidArgumentError(f"integer range {text!r} is empty")
    return sorted(values)
