"""Console narration for solver runs."""

from typing import Optional

from ..data.models import RunTrace


def _num(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3e}"


class Narrator:
    """Prints a progress line every `every` rounds."""

    def __init__(self, every: int = 100, quiet: bool = False):
        if every < 1:
            raise ValueError(f"every must be at least 1, got {every}")
        self.every = every
        self.quiet = quiet

    def banner(self, title: str, lines: Optional[list[str]] = None) -> None:
        if self.quiet:
            return
        print("=" * 60)
        print(f"  {title}")
        for line in lines or []:
            print(f"  {line}")
        print("=" * 60)

    def format_round(self, result) -> str:
        row = result.row
        return (
            f"[{result.algorithm.value}] k={row.k:>6}  "
            f"alpha={row.alpha_min:.3e}  gap={_num(row.gap_surrogate)}  "
            f"cons={row.consensus_err:.3e}  trials={row.ls_trials_total}"
        )

    def print_tick(self, result) -> None:
        """Print narration for a round result."""
        if self.quiet:
            return
        if result.row.k % self.every == 0:
            print(self.format_round(result))

    def summary(self, trace: RunTrace) -> str:
        """Final gap, rounds and messages of a finished run."""
        last = trace.last
        vec = sum(r.vec_msgs for r in trace.rows)
        scalar = sum(r.scalar_msgs for r in trace.rows)
        broadcast = sum(r.broadcast_msgs for r in trace.rows)
        return (
            f"{trace.algorithm}: rounds={trace.rounds} gap={_num(last.gap_surrogate)} "
            f"consensus={last.consensus_err:.3e} messages(vector/scalar/broadcast)={vec}/{scalar}/{broadcast}"
        )


class VerboseNarrator(Narrator):
    """Every round, with per-agent stepsizes and trial counts."""

    def __init__(self, quiet: bool = False):
        super().__init__(every=1, quiet=quiet)

    def print_tick(self, result) -> None:
        if self.quiet:
            return
        print(self.format_round(result))
        report = result.report
        agents = " ".join(
            f"{i}:{a:.2e}/{t}" for i, (a, t) in enumerate(zip(report.accepted, report.trials))
        )
        print(f"    accepted/trials {agents}")
        if report.drop:
            print(f"    budget reset (n={report.budget:.3e})")
