"""Terminal rendering of distributions, delta tables and reports."""

import sys
from typing import Mapping, Sequence


class Colors:
    """ANSI color codes for terminal output.

    Call ``Colors.init()`` once at startup to auto-detect TTY capability.
    Colors are enabled by default; ``init()`` disables them when stdout
    is not a terminal.
    """

    _COLOR_ATTRS = (
        "RESET",
        "BOLD",
        "DIM",
        "RED",
        "GREEN",
        "YELLOW",
        "BLUE",
        "MAGENTA",
        "CYAN",
        "WHITE",
        "BG_RED",
    )

    RESET = "\033[0m"
    BOLD = "\033[1m"
    DIM = "\033[2m"

    RED = "\033[31m"
    GREEN = "\033[32m"
    YELLOW = "\033[33m"
    BLUE = "\033[34m"
    MAGENTA = "\033[35m"
    CYAN = "\033[36m"
    WHITE = "\033[37m"

    BG_RED = "\033[41m"

    @classmethod
    def disable(cls):
        """Disable colors (set all codes to empty strings)."""
        for attr in cls._COLOR_ATTRS:
            setattr(cls, attr, "")

    @classmethod
    def init(cls):
        """Disable colors when stdout is not a TTY."""
        if not sys.stdout.isatty():
            cls.disable()


BAR_WIDTH = 30


def probability_bar(prob: float, width: int = BAR_WIDTH) -> str:
    """Horizontal bar of ``round(prob * width)`` cells, padded to ``width``."""
    filled = int(round(max(0.0, min(1.0, prob)) * width))
    return "█" * filled + "·" * (width - filled)


def signed(value: float, precision: int = 4) -> str:
    """Format a signed delta, green when positive and red when negative."""
    color = Colors.GREEN if value > 0 else Colors.RED if value < 0 else Colors.DIM
    return f"{color}{value:+.{precision}f}{Colors.RESET}"


def print_banner(title: str):
    print(
        f"\n{Colors.BOLD}{Colors.CYAN}"
        f"{'=' * 62}\n"
        f"  {title}\n"
        f"{'=' * 62}"
        f"{Colors.RESET}\n",
        flush=True,
    )


def print_section(title: str, rows: Sequence[tuple[str, str]]):
    """Print an aligned ``label: value`` block under a bold heading."""
    print(f"{Colors.BOLD}{title}:{Colors.RESET}")
    width = max((len(label) for label, _ in rows), default=0) + 1
    for label, value in rows:
        print(f"  {label + ':':<{width}} {value}")
    print(flush=True)


def print_distribution(title: str, labels: Sequence[str], probs: Sequence[float]):
    """Print one bar per label, highlighting the most probable one.

    Ties go to the first label, matching the canonical-order argmax.
    """
    best = max(range(len(probs)), key=lambda i: (probs[i], -i)) if probs else -1
    width = max((len(label) for label in labels), default=0)
    print(f"{Colors.BOLD}{title}{Colors.RESET}")
    for i, (label, prob) in enumerate(zip(labels, probs)):
        color = Colors.GREEN if i == best else Colors.DIM
        print(
            f"  {label:<{width}}  {color}{probability_bar(prob)}{Colors.RESET}"
            f"  {prob:.4f}"
        )
    print(flush=True)


def print_deltas(title: str, deltas: Mapping[str, float], threshold: float):
    """Print word deltas already sorted by magnitude, skipping small ones."""
    print(f"{Colors.BOLD}{title}{Colors.RESET}")
    shown = [(w, d) for w, d in deltas.items() if abs(d) >= threshold]
    if not shown:
        print(f"  {Colors.DIM}(no word changed by {threshold} or more){Colors.RESET}")
    width = max((len(w) for w, _ in shown), default=0)
    for word, delta in shown:
        cells = "█" * int(round(min(1.0, abs(delta)) * BAR_WIDTH))
        if delta < 0:
            line = f"{Colors.RED}{cells:>{BAR_WIDTH}}{Colors.RESET}|{' ' * BAR_WIDTH}"
        else:
            line = f"{' ' * BAR_WIDTH}|{Colors.GREEN}{cells:<{BAR_WIDTH}}{Colors.RESET}"
        print(f"  {word:<{width}}  {line}  {signed(delta)}")
    omitted = len(deltas) - len(shown)
    if omitted:
        print(
            f"  {Colors.DIM}({omitted} word(s) below {threshold} omitted)"
            f"{Colors.RESET}"
        )
    print(flush=True)


def print_confusion(labels: Sequence[str], matrix: Sequence[Sequence[int]]):
    """Print a confusion matrix with true labels as rows."""
    width = max(len(label) for label in labels) + 2
    header = "".join(f"{label:>{width}}" for label in labels)
    print(f"{Colors.BOLD}Confusion (rows = true, columns = predicted):{Colors.RESET}")
    print(f"  {'':<{width}}{header}")
    for i, (label, row) in enumerate(zip(labels, matrix)):
        cells = "".join(
            f"{Colors.GREEN if i == j else ''}{count:>{width}}"
            f"{Colors.RESET if i == j else ''}"
            for j, count in enumerate(row)
        )
        print(f"  {label:<{width}}{cells}")
    print(flush=True)
