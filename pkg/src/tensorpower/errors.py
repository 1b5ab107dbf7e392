"""Exception types shared across the library."""


def _fmt_count(n: int) -> str:
    # Restart caps can be astronomically large integers; avoid huge decimal
    # expansions in messages.
    if n < 10**9:
        return str(n)
    return f"~2**{n.bit_length() - 1}"


class DegenerateIterateError(RuntimeError):
    """Power iteration produced a numerically zero vector and cannot continue."""


class ExtractionFailureError(RuntimeError):
    """Every restart of one deflation round degenerated."""

    def __init__(self, round_index: int):
        super().__init__(f"all restarts degenerated in extraction round {round_index}")
        self.round_index = round_index


class NoFeasibleRestartError(RuntimeError):
    """No restart count within the search cap satisfies both side conditions."""

    def __init__(self, l_max: int):
        super().__init__(f"no feasible restart count <= {_fmt_count(l_max)}")
        self.l_max = l_max


class StalledDescentError(RuntimeError):
    """Backtracking line search could not find a non-increasing step."""


class DegenerateComponentsError(ValueError):
    """Component Gram matrix is numerically singular."""
