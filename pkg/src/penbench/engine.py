"""The sequential testing game.

One game runs over hidden nonnegative values ``X_1..X_n``. At step ``i`` the
player may run any finite sequence of tests; tests within a step are
cumulative, so a test at ``t`` after earlier tests summing to ``s`` behaves as
a single test at ``s + t``. A test passes when ``X_i`` strictly exceeds the
cumulative spend, and fails otherwise, revealing ``X_i`` and zeroing the
option. After testing, the player accepts (ending the game with score
``max(X_i - spend, 0)``) or rejects irrevocably.

The engine enforces information hiding: a strategy observes only pass/fail
bits, observed values on failures, and the public context fixed at game start.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Sequence

from .rng import Stream


class GameError(Exception):
    """Base class for engine errors."""


class ContractViolation(GameError):
    """A strategy broke the game protocol (bad action, too many tests)."""


class ValidationError(GameError):
    """Malformed inputs: negative thresholds, empty instances, NaN values."""


@dataclass(frozen=True)
class Test:
    """Action: test the current option at an additional threshold amount."""

    threshold: float

    def __post_init__(self):
        t = self.threshold
        if isinstance(t, bool) or not (t >= 0.0):  # rejects NaN and negatives
            raise ValidationError(f"test threshold must be >= 0, got {t!r}")


class Decision(Enum):
    ACCEPT = "accept"
    REJECT = "reject"


ACCEPT = Decision.ACCEPT
REJECT = Decision.REJECT


@dataclass(frozen=True)
class StepOutcome:
    """Result of one test: a bare pass, or a fail carrying the exact value."""

    passed: bool
    observed: Optional[float] = None

    def __post_init__(self):
        if self.passed and self.observed is not None:
            raise ValidationError("a pass carries no observed value")
        if not self.passed and self.observed is None:
            raise ValidationError("a fail must carry the observed value")


@dataclass(frozen=True)
class GameContext:
    """Public knowledge fixed at game start: n plus the information payload.

    The payload depends on the information regime: the full value multiset,
    the maximum value, an arbitrary hint, or None.
    """

    n: int
    payload: Any = None


@dataclass
class StepRecord:
    thresholds: List[float] = field(default_factory=list)
    outcomes: List[StepOutcome] = field(default_factory=list)
    decision: str = ""


@dataclass
class GameResult:
    score: float
    accepted_index: Optional[int]  # 1-based, None if nothing accepted
    transcript: List[StepRecord]

    def to_json(self) -> str:
        steps = []
        for rec in self.transcript:
            outs = []
            for o in rec.outcomes:
                if o.passed:
                    outs.append({"kind": "pass"})
                else:
                    outs.append({"kind": "fail", "observed": o.observed})
            steps.append(
                {
                    "thresholds": list(rec.thresholds),
                    "outcomes": outs,
                    "decision": rec.decision,
                }
            )
        return json.dumps(
            {
                "score": self.score,
                "accepted_index": self.accepted_index,
                "steps": steps,
            }
        )


class Strategy:
    """Player contract. Subclasses implement the two callbacks.

    ``on_step_begin`` is called once per step and returns the first action;
    ``on_outcome`` is called after each test with its outcome and returns the
    next action. Returning ACCEPT or REJECT closes the step. Strategies are
    built fresh per trial with an injected Stream and never see a value except
    through a fail outcome.
    """

    def on_step_begin(self, index: int, ctx: GameContext):
        raise NotImplementedError

    def on_outcome(self, outcome: StepOutcome):
        raise NotImplementedError


def score_from_transcript(result: GameResult, values: Sequence[float]) -> float:
    """Recompute the score from the transcript alone (replay identity)."""
    if result.accepted_index is None:
        return 0.0
    rec = result.transcript[-1]
    spent = 0.0
    for t, o in zip(rec.thresholds, rec.outcomes):
        spent += t
        if not o.passed:
            break  # later tests on an exhausted option are no-ops
    x = values[result.accepted_index - 1]
    return max(x - spent, 0.0)


def play(
    instance,
    strategy: Strategy,
    rng: Stream,
    payload: Any = None,
    max_tests_per_step: int = 64,
) -> GameResult:
    """Run one game of ``strategy`` against ``instance``.

    ``rng`` drives the instance's order model (strategies own their separate
    stream). The transcript records every test, outcome and decision up to and
    including the accepting step.
    """
    values = instance.realized_values(rng)
    n = len(values)
    if n < 1:
        raise ValidationError("instance must have at least one option")
    ctx = GameContext(n=n, payload=payload)

    transcript: List[StepRecord] = []
    score = 0.0
    accepted_index: Optional[int] = None

    for i in range(1, n + 1):
        x = float(values[i - 1])
        rec = StepRecord()
        spent = 0.0
        exhausted = False
        action = strategy.on_step_begin(i, ctx)
        while isinstance(action, Test):
            if len(rec.thresholds) >= max_tests_per_step:
                raise ContractViolation(
                    f"more than {max_tests_per_step} tests in step {i}"
                )
            rec.thresholds.append(action.threshold)
            if exhausted:
                outcome = StepOutcome(False, x)  # no-op repeat, value known
            else:
                spent = spent + action.threshold
                if x <= spent:
                    exhausted = True
                    outcome = StepOutcome(False, x)
                else:
                    outcome = StepOutcome(True)
            rec.outcomes.append(outcome)
            action = strategy.on_outcome(outcome)
        if action is Decision.ACCEPT:
            rec.decision = "accept"
            transcript.append(rec)
            accepted_index = i
            score = max(x - spent, 0.0)
            break
        if action is Decision.REJECT:
            rec.decision = "reject"
            transcript.append(rec)
            continue
        raise ContractViolation(f"invalid action {action!r} in step {i}")

    result = GameResult(score=score, accepted_index=accepted_index, transcript=transcript)
    # Score identity: the transcript alone must reproduce the score.
    assert score == score_from_transcript(result, values)
    return result


class RecordingStrategy(Strategy):
    """Wraps a strategy and logs its action sequence (for replay tests)."""

    def __init__(self, inner: Strategy):
        self.inner = inner
        self.actions: List[Any] = []

    def on_step_begin(self, index, ctx):
        a = self.inner.on_step_begin(index, ctx)
        self.actions.append(a)
        return a

    def on_outcome(self, outcome):
        a = self.inner.on_outcome(outcome)
        self.actions.append(a)
        return a
