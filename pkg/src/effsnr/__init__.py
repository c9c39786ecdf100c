"""Effective SNR delivery prediction for MIMO-OFDM links."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .ber import ber, inv_ber
from .csi import ChannelTrace, CsiMeasurement, flat_csi
from .mcs import MCS_TABLE, get_mcs
from .model import (EffectiveSnrResult, Mapping, RxConfig, TxConfig, effective_csi,
                    effective_snr, predict, rate_space, subchannel_snrs)
from .thresholds import ThresholdTable

__version__ = "0.1.0"


@lru_cache(maxsize=1)
def default_thresholds() -> ThresholdTable:
    """Thresholds calibrated against the bundled PHY simulator (1500 B packets)."""
    text = resources.files(__package__).joinpath("data/default_thresholds.json").read_text(
        encoding="utf-8")
    return ThresholdTable.from_json(text)


__all__ = [
    "ChannelTrace", "CsiMeasurement", "EffectiveSnrResult", "MCS_TABLE", "Mapping", "RxConfig",
    "ThresholdTable", "TxConfig", "ber", "default_thresholds", "effective_csi", "effective_snr",
    "flat_csi", "get_mcs", "inv_ber", "predict", "rate_space", "subchannel_snrs",
]
