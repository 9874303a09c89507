"""Entropy arithmetic and the (k, m) configuration grid report."""

from __future__ import annotations

from dataclasses import dataclass

from .scheme import theoretical_entropy

ONLINE_SUFFICIENT_BITS = 20.0  # enough with reasonable lockout rules


@dataclass(frozen=True)
class EntropyRow:
    k: int
    m: int
    bits: float
    guess_probability: float  # per-attempt online success chance
    meets_online_target: bool


def entropy_row(k: int, m: int, target_bits: float = ONLINE_SUFFICIENT_BITS) -> EntropyRow:
    bits = theoretical_entropy(k, m)
    return EntropyRow(
        k=k,
        m=m,
        bits=bits,
        guess_probability=float(k) ** -m,
        meets_online_target=bits >= target_bits,
    )


def entropy_report(
    ks=(2, 4, 9, 13, 20, 26),
    ms=(1, 2, 3, 4, 5, 6),
    target_bits: float = ONLINE_SUFFICIENT_BITS,
) -> list:
    """Grid of entropy/guess-probability rows over candidate (k, m) pairs."""
    return [entropy_row(k, m, target_bits) for k in ks for m in ms]


def rows_meeting_target(rows, target_bits: float = ONLINE_SUFFICIENT_BITS) -> list:
    return [r for r in rows if r.bits >= target_bits]


def format_report(rows) -> str:
    lines = [f"{'k':>4} {'m':>3} {'bits':>8} {'P(guess)':>12}  >=20 bits"]
    for r in rows:
        lines.append(
            f"{r.k:>4} {r.m:>3} {r.bits:>8.2f} {r.guess_probability:>12.3e}  "
            f"{'yes' if r.meets_online_target else 'no'}"
        )
    return "\n".join(lines)
