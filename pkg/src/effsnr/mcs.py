"""802.11n modulation and coding schemes (20 MHz, long guard interval)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

BITS_PER_SYMBOL = {"BPSK": 1, "QPSK": 2, "16QAM": 4, "64QAM": 6}
MODULATION_NAME = {k: name for name, k in BITS_PER_SYMBOL.items()}

# single-stream rows: (modulation, code rate, Mbps)
_SINGLE_STREAM = (
    ("BPSK", Fraction(1, 2), 6.5),
    ("QPSK", Fraction(1, 2), 13.0),
    ("QPSK", Fraction(3, 4), 19.5),
    ("16QAM", Fraction(1, 2), 26.0),
    ("16QAM", Fraction(3, 4), 39.0),
    ("64QAM", Fraction(2, 3), 52.0),
    ("64QAM", Fraction(3, 4), 58.5),
    ("64QAM", Fraction(5, 6), 65.0),
)


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation: str
    code_rate: Fraction
    n_streams: int
    rate_mbps: float

    @property
    def bits_per_symbol(self) -> int:
        return BITS_PER_SYMBOL[self.modulation]

    @property
    def base_index(self) -> int:
        """Index of the single-stream MCS with the same modulation and code."""
        return self.index % 8

    def __str__(self) -> str:
        return f"MCS{self.index}"


def _build_table() -> tuple[McsEntry, ...]:
    rows = []
    for streams in (1, 2, 3):
        for i, (mod, rate, mbps) in enumerate(_SINGLE_STREAM):
            rows.append(McsEntry(8 * (streams - 1) + i, mod, rate, streams,
                                 mbps * streams))
    return tuple(rows)


MCS_TABLE: tuple[McsEntry, ...] = _build_table()

MCS_SETS = {
    "siso": tuple(range(0, 8)),
    "mimo2": tuple(range(8, 16)),
    "mimo3": tuple(range(16, 24)),
    "all": tuple(range(0, 24)),
}


def get_mcs(index: int) -> McsEntry:
    if not 0 <= index < len(MCS_TABLE):
        raise ValueError(f"MCS index out of range: {index}")
    return MCS_TABLE[index]


def mcs_set(name: str, max_streams: int = 3) -> list[McsEntry]:
    """MCS entries of a named set, dropping those needing more than `max_streams`."""
    try:
        indices = MCS_SETS[name]
    except KeyError:
        raise ValueError(f"unknown MCS set {name!r}; expected one of {sorted(MCS_SETS)}") from None
    return [MCS_TABLE[i] for i in indices if MCS_TABLE[i].n_streams <= max_streams]
