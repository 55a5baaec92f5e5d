"""Run configuration and deterministic report emission.

Reports are JSON with sorted keys, two-space indent, and a trailing newline;
numbers that started life at high precision travel as decimal strings tagged
with their precision.  Identical configs (including seeds) must produce
byte-identical output, so nothing here touches clocks or float formatting
that could vary across runs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import InvalidInputError

SCHEMA_VERSION = "1"


@dataclass
class RunConfig:
    family: str
    precision_bits: int = 256
    omega: str | None = None
    target_cf: list[int] | None = None
    target_periodic: bool = False
    params: dict = field(default_factory=dict)
    depth: int = 8
    gammas: list[float] = field(default_factory=lambda: [0.3, 0.5, 0.7])
    tau: float = 0.0
    samples: int = 200
    seed: int = 0
    orbit_cap: int = 50_000
    out_path: str | None = None
    out_format: str = "json"

    def __post_init__(self):
        if (self.omega is None) == (self.target_cf is None):
            raise InvalidInputError("exactly one of omega / target_cf must be given")
        if self.depth < 3:
            raise InvalidInputError("depth must be >= 3")
        if self.precision_bits < 128:
            raise InvalidInputError("precision_bits must be >= 128")
        for g in self.gammas:
            if not 0 < g < 1:
                raise InvalidInputError(f"gamma {g} outside (0, 1)")
        if self.target_cf is not None and not self.target_cf:
            raise InvalidInputError("target_cf must be non-empty")
        if self.out_format not in ("json", "csv"):
            raise InvalidInputError("format must be json or csv")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        m = d.get("map", {})
        a = d.get("analysis", {})
        o = d.get("output", {})
        return cls(
            family=m.get("family", "arnold_cubic"),
            precision_bits=int(m.get("precision_bits", 256)),
            omega=(str(m["omega"]) if "omega" in m and m["omega"] is not None else None),
            target_cf=(list(m["target_cf"]) if m.get("target_cf") else None),
            target_periodic=bool(m.get("target_periodic", False)),
            params={k: v for k, v in m.items()
                    if k not in ("family", "omega", "target_cf", "target_periodic",
                                 "precision_bits")},
            depth=int(a.get("depth", 8)),
            gammas=[float(g) for g in a.get("gamma", [0.3, 0.5, 0.7])],
            tau=float(a.get("tau", 0.0)),
            samples=int(a.get("samples", 200)),
            seed=int(a.get("seed", 0)),
            orbit_cap=int(a.get("orbit_cap", 50_000)),
            out_path=o.get("path"),
            out_format=o.get("format", "json"),
        )

    def to_dict(self) -> dict:
        return {
            "map": {
                "family": self.family,
                "omega": self.omega,
                "target_cf": self.target_cf,
                "target_periodic": self.target_periodic,
                "precision_bits": self.precision_bits,
                **self.params,
            },
            "analysis": {
                "depth": self.depth,
                "gamma": self.gammas,
                "tau": self.tau,
                "samples": self.samples,
                "seed": self.seed,
                "orbit_cap": self.orbit_cap,
            },
            "output": {"path": self.out_path, "format": self.out_format},
        }


def emit_json(report: dict) -> bytes:
    """Canonical bytes: schema-tagged, sorted keys, trailing newline."""
    body = dict(report)
    body.setdefault("schema_version", SCHEMA_VERSION)
    return (json.dumps(body, sort_keys=True, indent=2,
                       ensure_ascii=True) + "\n").encode("utf-8")


def emit_csv(rows: list[tuple], header: tuple) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def write_output(data: bytes, path: str | None) -> None:
    if path is None or path == "-":
        import sys
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)
