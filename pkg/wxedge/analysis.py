"""
Failure-mode classification and evaluation aggregates.

Collisions are labelled from the detection history before first contact:
the lead was never seen, it was seen and then lost, or it was first seen
inside the ego's stopping distance. Only ticks at which the struck vehicle
was already the lead count, so a cut-in starts a fresh history.
"""

from collections.abc import Iterable, Sequence
from typing import Optional

from .models.records import (
    AgentAggregate,
    EdgeCase,
    EpisodeRecord,
    EpisodeSummary,
    FailureMode,
)


class FailureAnalyzer:
    """Labels collision episodes and rolls episodes up into per-agent aggregates."""

    def __init__(
        self,
        failure_window: int = 50,
        dropout_ticks: int = 10,
        a_dec_max: float = 8.0,
    ):
        """
        Initialize the analyzer.

        Args:
            failure_window: Ticks before contact inspected for track loss (W)
            dropout_ticks: Undetected run length that counts as a lost track (G)
            a_dec_max: Braking authority used for the stopping-distance test
        """
        self.failure_window = failure_window
        self.dropout_ticks = dropout_ticks
        self.a_dec_max = a_dec_max

    def _lost_track(self, detected: Sequence[bool], contact: int) -> bool:
        window_start = max(0, contact - self.failure_window)
        t = 1
        while t < contact:
            if detected[t] or not detected[t - 1]:
                t += 1
                continue
            run_end = t
            while run_end < contact and not detected[run_end]:
                run_end += 1
            if run_end - max(t, window_start) >= self.dropout_ticks:
                return True
            t = run_end
        return False

    def classify_history(
        self,
        detected: Sequence[bool],
        gaps: Sequence[float],
        speeds: Sequence[float],
        contact: Optional[int],
        since: int = 0,
    ) -> FailureMode:
        """
        Label one detection history.

        Args:
            detected: Per-tick detection flags
            gaps: Per-tick true gap (m)
            speeds: Per-tick ego speed (m/s)
            contact: Index of the first-contact tick, or None without a collision
            since: First index at which the struck vehicle was the lead; earlier
                ticks describe a vehicle that has since cut out

        Returns:
            The failure mode; ambiguous collisions fall back to INTERMITTENT
        """
        if contact is None:
            return FailureMode.NONE
        if not 0 <= since <= contact:
            raise ValueError(f"since {since} must lie in [0, contact {contact}]")

        before = list(detected[since:contact])
        if not any(before):
            return FailureMode.NON_DETECTION

        if self._lost_track(before, contact - since):
            return FailureMode.INTERMITTENT

        first = since + before.index(True)
        stopping_distance = speeds[first] ** 2 / (2.0 * self.a_dec_max)
        if gaps[first] < stopping_distance:
            return FailureMode.DELAYED

        return FailureMode.INTERMITTENT

    def classify(self, record: EpisodeRecord) -> FailureMode:
        """Label a record from the history of the vehicle it struck."""
        contact = record.contact_tick
        since = 0
        if contact is not None:
            struck = record.rows[contact].lead_index
            since = next(i for i, row in enumerate(record.rows) if row.lead_index == struck)
        return self.classify_history(
            [row.detected for row in record.rows],
            [row.gap for row in record.rows],
            [row.ego_speed for row in record.rows],
            contact,
            since,
        )

    def aggregate(
        self, summaries: Iterable[EpisodeSummary], agents: Optional[Sequence[str]] = None
    ) -> list[AgentAggregate]:
        """
        Per-agent means, sums and failure-mode histograms.

        Args:
            summaries: Per-episode rows, in table order
            agents: Output order; defaults to first appearance

        Returns:
            One aggregate per agent
        """
        grouped: dict[str, list[EpisodeSummary]] = {}
        for summary in summaries:
            grouped.setdefault(summary.agent, []).append(summary)

        order = list(agents) if agents is not None else list(grouped)
        aggregates = []
        for agent in order:
            rows = grouped.get(agent, [])
            count = len(rows)
            lambda_c = lambda_p = reward = deficit = 0.0
            histogram = {mode.value: 0 for mode in FailureMode}
            for row in rows:
                lambda_c += row.lambda_c
                lambda_p += row.lambda_p
                reward += row.reward_sum
                deficit += row.deficit_sum
                histogram[row.failure_mode.value] += 1

            aggregates.append(
                AgentAggregate(
                    agent=agent,
                    episodes=count,
                    mean_lambda_c=lambda_c / count if count else 0.0,
                    mean_lambda_p=lambda_p / count if count else 0.0,
                    mean_reward=reward / count if count else 0.0,
                    deficit_sum=deficit,
                    collisions=sum(1 for row in rows if row.collided),
                    failure_modes=histogram,
                )
            )
        return aggregates


def classify_failure(
    record: EpisodeRecord,
    failure_window: int = 50,
    dropout_ticks: int = 10,
    a_dec_max: float = 8.0,
) -> FailureMode:
    """Convenience wrapper around ``FailureAnalyzer.classify``."""
    return FailureAnalyzer(failure_window, dropout_ticks, a_dec_max).classify(record)


def find_edge_case(record: EpisodeRecord, episode_file: str) -> Optional[EdgeCase]:
    """The record as an edge case, if any rule was violated."""
    for row in record.rows:
        if row.alpha_c > 0.0 or row.alpha_p > 0.0:
            return EdgeCase(
                agent=record.agent,
                scene_id=record.scene_id,
                lambda_c=record.totals.lambda_c,
                lambda_p=record.totals.lambda_p,
                failure_mode=record.failure_mode,
                episode_file=episode_file,
                first_violation_tick=row.tick,
                knobs_at_violation=list(row.knobs),
            )
    return None
