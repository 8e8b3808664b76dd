"""Event-sourced tracker of the instruction-GUI interaction.

Three operator inputs exist: advance to the next instruction, re-view the
current one (a check-back), or go back ``steps`` instructions. A back of
more than one step registers an assembly mistake.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import OrderingError, Timestamp

NEXT = "next"
CHECK_BACK = "check_back"
BACK = "back"
EVENT_KINDS = (NEXT, CHECK_BACK, BACK)


@dataclass(frozen=True)
class InstructionEvent:
    timestamp: Timestamp
    kind: str
    steps: int = 1  # only meaningful for BACK

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown instruction event kind {self.kind!r}")
        if self.kind == BACK and self.steps < 1:
            raise ValueError("back events need steps >= 1")


@dataclass(frozen=True)
class InstructionTally:
    checks: int = 0
    check_backs: int = 0
    mistakes: int = 0


@dataclass(frozen=True)
class InstructionState:
    current_index: int = 1
    instructions_shown: int = 0
    instruction_checks: int = 0
    check_backs: int = 0
    mistakes: tuple[Timestamp, ...] = ()
    per_instruction: dict[int, InstructionTally] = field(default_factory=dict)
    clamped: bool = False          # a back event ran past instruction 1
    last_timestamp: Timestamp = 0.0

    def tally(self, index: int) -> InstructionTally:
        return self.per_instruction.get(index, InstructionTally())


def apply_event(state: InstructionState, ev: InstructionEvent) -> InstructionState:
    """Fold one GUI event into the state.

    Every event counts as an instruction check (the GUI displays an
    instruction afterwards), and per-instruction tallies are charged to
    the instruction displayed once the event lands — for a back event
    that is the instruction the operator returns to.
    """
    if ev.timestamp < state.last_timestamp:
        raise OrderingError(
            f"instruction event at {ev.timestamp} precedes {state.last_timestamp}"
        )
    per = dict(state.per_instruction)

    def bump(index: int, **deltas: int) -> None:
        t = per.get(index, InstructionTally())
        per[index] = InstructionTally(
            checks=t.checks + deltas.get("checks", 0),
            check_backs=t.check_backs + deltas.get("check_backs", 0),
            mistakes=t.mistakes + deltas.get("mistakes", 0),
        )

    if ev.kind == NEXT:
        new_index = state.current_index + 1
        bump(new_index, checks=1)
        return InstructionState(
            current_index=new_index,
            instructions_shown=state.instructions_shown + 1,
            instruction_checks=state.instruction_checks + 1,
            check_backs=state.check_backs,
            mistakes=state.mistakes,
            per_instruction=per,
            clamped=state.clamped,
            last_timestamp=ev.timestamp,
        )
    if ev.kind == CHECK_BACK:
        bump(state.current_index, checks=1, check_backs=1)
        return InstructionState(
            current_index=state.current_index,
            instructions_shown=state.instructions_shown,
            instruction_checks=state.instruction_checks + 1,
            check_backs=state.check_backs + 1,
            mistakes=state.mistakes,
            per_instruction=per,
            clamped=state.clamped,
            last_timestamp=ev.timestamp,
        )
    # BACK
    new_index = state.current_index - ev.steps
    clamped = state.clamped or new_index < 1
    new_index = max(1, new_index)
    is_mistake = ev.steps > 1
    bump(new_index, checks=1, mistakes=1 if is_mistake else 0)
    return InstructionState(
        current_index=new_index,
        instructions_shown=state.instructions_shown,
        instruction_checks=state.instruction_checks + 1,
        check_backs=state.check_backs,
        mistakes=state.mistakes + ((ev.timestamp,) if is_mistake else ()),
        per_instruction=per,
        clamped=clamped,
        last_timestamp=ev.timestamp,
    )


def not_required_switches(state: InstructionState) -> int:
    """Instruction checks beyond the one required per shown instruction."""
    return state.instruction_checks - state.instructions_shown
