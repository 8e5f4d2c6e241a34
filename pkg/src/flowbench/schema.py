"""The 24-feature time-related flow schema.

Seven characteristic families, each contributing a subset of the statistic
kinds (total, mean, std, max, min), flattened in a fixed order that every
dataset, model, and serialized artifact must use.
"""
from __future__ import annotations

from dataclasses import dataclass

SCHEMA_VERSION = "flow-24-v1"

STAT_ORDER = ("total", "mean", "std", "max", "min")

_FAMILY_SPECS = (
    ("flow_iat", "Packet inter-arrival time of the full connection", ("mean", "std", "max", "min"), "seconds"),
    ("fwd_iat", "Packet inter-arrival time, client direction", ("total", "mean", "std", "max", "min"), "seconds"),
    ("bwd_iat", "Packet inter-arrival time, server direction", ("total", "mean", "std", "max", "min"), "seconds"),
    ("fwd_bulk_rate", "Bulk transmission rate, client direction", ("mean",), "bytes_per_second"),
    ("bwd_bulk_rate", "Bulk transmission rate, server direction", ("mean",), "bytes_per_second"),
    ("active", "Time the connection was actively transmitting", ("mean", "std", "max", "min"), "seconds"),
    ("idle", "Time the connection was inactive", ("mean", "std", "max", "min"), "seconds"),
)


@dataclass(frozen=True)
class Family:
    name: str
    description: str
    stat_kinds: tuple[str, ...]
    unit: str

    def feature_names(self) -> tuple[str, ...]:
        return tuple(f"{self.name}_{stat}" for stat in self.stat_kinds)


@dataclass(frozen=True)
class FeatureSchema:
    """Fixed feature layout: a tuple of families and the flattened column order."""

    families: tuple[Family, ...]
    version: str = SCHEMA_VERSION

    def __post_init__(self):
        for fam in self.families:
            bad = set(fam.stat_kinds) - set(STAT_ORDER)
            if bad:
                raise ValueError(f"unknown stat kinds {sorted(bad)} in family {fam.name}")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(name for fam in self.families for name in fam.feature_names())

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise KeyError(f"unknown feature {name!r}") from None

    def family_columns(self) -> dict[str, dict[str, int]]:
        """Map family name -> stat kind -> column index."""
        out: dict[str, dict[str, int]] = {}
        col = 0
        for fam in self.families:
            out[fam.name] = {stat: col + i for i, stat in enumerate(fam.stat_kinds)}
            col += len(fam.stat_kinds)
        return out


def default_schema() -> FeatureSchema:
    return _DEFAULT


_DEFAULT = FeatureSchema(
    families=tuple(Family(name, desc, stats, unit) for name, desc, stats, unit in _FAMILY_SPECS)
)

N_FEATURES = _DEFAULT.n_features

assert N_FEATURES == 24
