import re

from utils.tomography.qstate import NAMED_LABELS, NamedState, StateError, custom_state, named_state

NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_state(text: str) -> NamedState:
    """
    Parses a state string into a NamedState.

    Example:
    horizontal
    custom:1,0.2,0.1,0.0
    custom:1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0

    Parameters:
    text (str): a named label or custom:<s0>,<s1>,... with 4 or 16 components.

    Returns:
    NamedState: the resolved state, custom states are checked for physicality.
    """
    text = text.strip()
    if text in NAMED_LABELS:
        return named_state(text)

    # Define the regular expression pattern
    pattern = rf"custom:\s*({NUMBER}(?:\s*,\s*{NUMBER})*)"
    match = re.fullmatch(pattern, text)

    if match:
        components = [float(part) for part in match.group(1).split(",")]
        return custom_state(components)

    raise StateError(
        f"unknown state '{text}', expected one of {', '.join(NAMED_LABELS)} "
        "or custom:<s0>,<s1>,..."
    )


def parse_counts(text: str) -> list[int]:
    """Comma separated detector tallies, e.g. 3,1,1,1."""
    match = re.fullmatch(r"\s*\d+(?:\s*,\s*\d+)*\s*", text)
    if not match:
        raise ValueError(f"counts must be comma separated non-negative integers, got '{text}'")
    return [int(part) for part in text.split(",")]

