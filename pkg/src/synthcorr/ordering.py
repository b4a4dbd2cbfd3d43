"""Ordering sequences eta over {+, -, 0}.

A string such as ``"+--+"`` is read in the printed correlation notation,
latest time first: C^{eta_N ... eta_1}.  Internally ``entries`` is stored
earliest first, so ``entries[0]`` is eta_1 and is applied to the state first.
"""

from __future__ import annotations

from dataclasses import dataclass

_ALIASES = {"+": "+", "-": "-", "0": "0", "−": "-", "p": "+", "m": "-"}


@dataclass(frozen=True)
class OrderingSequence:
    entries: tuple  # earliest first

    def __post_init__(self):
        if not self.entries:
            raise ValueError("ordering sequence must be nonempty")
        ent = tuple(_ALIASES.get(str(e), None) for e in self.entries)
        if None in ent:
            raise ValueError(f"invalid ordering entries {self.entries!r}; use +, - or 0")
        object.__setattr__(self, "entries", ent)

    @classmethod
    def from_string(cls, s: str) -> "OrderingSequence":
        """Parse printed notation (latest time first)."""
        s = s.strip()
        bad = [c for c in s if c not in _ALIASES]
        if bad or not s:
            raise ValueError(f"invalid ordering string {s!r}; use +, - or 0")
        return cls(tuple(reversed([_ALIASES[c] for c in s])))

    @classmethod
    def coerce(cls, eta) -> "OrderingSequence":
        if isinstance(eta, OrderingSequence):
            return eta
        if isinstance(eta, str):
            return cls.from_string(eta)
        # tuples and lists are taken in printed order as well
        return cls(tuple(reversed([str(e) for e in eta])))

    @property
    def notation(self) -> str:
        return "".join(reversed(self.entries))

    @property
    def theta(self) -> int:
        return sum(e != "0" for e in self.entries)

    def __len__(self):
        return len(self.entries)

    def __str__(self):
        return self.notation

    def sensor_side(self) -> "OrderingSequence":
        """The conjugate sequence eta-bar used on the sensor (+ <-> -)."""
        flip = {"+": "-", "-": "+", "0": "0"}
        return OrderingSequence(tuple(flip[e] for e in self.entries))


def vanishing_correlation_filter(eta) -> bool:
    """True when the latest non-zero entry is a commutator.

    The bath trace of a leading commutator vanishes identically, so such
    correlations never contribute to a signal.
    """
    seq = OrderingSequence.coerce(eta)
    for e in reversed(seq.entries):
        if e != "0":
            return e == "-"
    return False
