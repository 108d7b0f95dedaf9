"""Sequence move primitives shared by the evaluator and the local search.

Positions are 0-based indices into the sequence; every move carries a
pair t1 < t2.  Semantics:

  swap             exchange the vehicles at t1 and t2
  insert_forward   remove the vehicle at t1, reinsert it at t2
  insert_backward  remove the vehicle at t2, reinsert it at t1
  inversion        reverse the closed block [t1, t2]
"""

from __future__ import annotations

from dataclasses import dataclass

SWAP = "swap"
INSERT_FORWARD = "insert_forward"
INSERT_BACKWARD = "insert_backward"
INVERSION = "inversion"

MOVE_KINDS = (SWAP, INSERT_FORWARD, INSERT_BACKWARD, INVERSION)


@dataclass(frozen=True)
class Move:
    kind: str
    t1: int
    t2: int

    def __post_init__(self):
        if self.kind not in MOVE_KINDS:
            raise ValueError(f"unknown move kind {self.kind!r}")
        if not (0 <= self.t1 < self.t2):
            raise ValueError("moves need 0 <= t1 < t2")


def apply_to_order(order: tuple[int, ...], move: Move) -> tuple[int, ...]:
    t1, t2 = move.t1, move.t2
    if t2 >= len(order):
        raise ValueError("move position beyond end of sequence")
    if move.kind == SWAP:
        out = list(order)
        out[t1], out[t2] = out[t2], out[t1]
        return tuple(out)
    if move.kind == INSERT_FORWARD:
        return order[:t1] + order[t1 + 1:t2 + 1] + (order[t1],) + order[t2 + 1:]
    if move.kind == INSERT_BACKWARD:
        return order[:t1] + (order[t2],) + order[t1:t2] + order[t2 + 1:]
    return order[:t1] + tuple(reversed(order[t1:t2 + 1])) + order[t2 + 1:]
