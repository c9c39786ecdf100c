"""Per-MCS decision thresholds and their JSON form."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional


@dataclass(frozen=True)
class ThresholdTable:
    """Effective SNR threshold (dB) for each MCS index.

    ``packet_snr`` optionally carries a parallel table in the Packet SNR domain.
    """

    thresholds: Mapping[int, float]
    receiver_model: str = "mmse"
    packet_len_bytes: int = 1500
    packet_snr: Optional[Mapping[int, float]] = None
    flags: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        tab = {int(k): float(v) for k, v in self.thresholds.items()}
        for k, v in tab.items():
            if not math.isfinite(v):
                raise ValueError(f"threshold for MCS {k} is not finite")
        object.__setattr__(self, "thresholds", tab)
        if self.packet_snr is not None:
            object.__setattr__(self, "packet_snr",
                               {int(k): float(v) for k, v in self.packet_snr.items()})
        object.__setattr__(self, "flags", {int(k): str(v) for k, v in self.flags.items()})

    def __getitem__(self, mcs_index: int) -> float:
        return self.thresholds[mcs_index]

    def __contains__(self, mcs_index: int) -> bool:
        return mcs_index in self.thresholds

    def shifted(self, delta_db: float) -> "ThresholdTable":
        return ThresholdTable({k: v + delta_db for k, v in self.thresholds.items()},
                              self.receiver_model, self.packet_len_bytes,
                              None if self.packet_snr is None
                              else {k: v + delta_db for k, v in self.packet_snr.items()},
                              self.flags)

    def domain(self, metric: str) -> "ThresholdTable":
        """Table for ``"effective-snr"`` or (from ``packet_snr``) ``"packet-snr"``."""
        if metric == "effective-snr":
            return self
        if metric == "packet-snr":
            if self.packet_snr is None:
                raise ValueError("table has no Packet SNR thresholds")
            return ThresholdTable(self.packet_snr, self.receiver_model, self.packet_len_bytes)
        raise ValueError(f"unknown metric {metric!r}")

    def to_json(self) -> str:
        obj = {"receiver_model": self.receiver_model,
               "packet_len_bytes": self.packet_len_bytes,
               "thresholds": {str(k): v for k, v in sorted(self.thresholds.items())}}
        if self.packet_snr is not None:
            obj["packet_snr_thresholds"] = {str(k): v for k, v in sorted(self.packet_snr.items())}
        if self.flags:
            obj["flags"] = {str(k): v for k, v in sorted(self.flags.items())}
        return json.dumps(obj, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ThresholdTable":
        obj = json.loads(text)
        return cls(obj["thresholds"], obj.get("receiver_model", "mmse"),
                   int(obj.get("packet_len_bytes", 1500)),
                   obj.get("packet_snr_thresholds"), obj.get("flags", {}))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ThresholdTable":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
