"""Result records: versioned CSV and JSON with full seed provenance.

Every output embeds the rng scheme name and the master seed; numeric
fields are written with repr so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .mc import RNG_SCHEME, MCEstimate, WindowEstimate

__all__ = ["ResultRecord", "ResultSet", "FORMAT_VERSION"]

FORMAT_VERSION = 1

_CSV_HEADER = "format_version,rng,seed,op,params,mean,std_error,reps"


def _fmt(x) -> str:
    import numpy as _np
    if isinstance(x, (float, _np.floating)):
        return repr(float(x))
    if isinstance(x, _np.integer):
        return str(int(x))
    return str(x)


@dataclass(frozen=True)
class ResultRecord:
    op: str
    params: dict
    mean: float
    std_error: float
    reps: int

    @classmethod
    def from_estimate(cls, est: MCEstimate) -> "ResultRecord":
        params = {k: v for k, v in est.params.items() if k != "op"}
        return cls(op=est.params.get("op", "estimate"), params=params,
                   mean=est.mean, std_error=est.std_error, reps=est.reps)

    @classmethod
    def from_window(cls, win: WindowEstimate, n: float) -> "ResultRecord":
        return cls(op="threshold_window",
                   params={"n": n, "eps_level": win.eps_level,
                           "p_lo": win.p_lo, "p_hi": win.p_hi},
                   mean=win.width, std_error=0.0,
                   reps=win.grid[0][1].reps if win.grid else 0)


@dataclass
class ResultSet:
    seed: int
    records: list = field(default_factory=list)
    rng: str = RNG_SCHEME

    def add(self, record: ResultRecord) -> None:
        self.records.append(record)

    def add_estimate(self, est: MCEstimate) -> None:
        self.add(ResultRecord.from_estimate(est))

    def add_window(self, win: WindowEstimate, n: float) -> None:
        self.add(ResultRecord.from_window(win, n))
        for p, est in win.grid:
            self.add_estimate(est)

    def to_csv(self) -> str:
        lines = [_CSV_HEADER]
        for r in self.records:
            params = json.dumps(r.params, sort_keys=True, default=_fmt)
            params = params.replace('"', "'")
            lines.append(",".join([
                str(FORMAT_VERSION), self.rng, str(self.seed), r.op,
                f'"{params}"', _fmt(r.mean), _fmt(r.std_error), str(r.reps),
            ]))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "format_version": FORMAT_VERSION,
            "rng": self.rng,
            "seed": self.seed,
            "results": [{
                "op": r.op, "params": r.params, "mean": r.mean,
                "std_error": r.std_error, "reps": r.reps,
            } for r in self.records],
        }, sort_keys=True, indent=1, default=_fmt)

    def write(self, path: str, fmt: str) -> None:
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w") as f:
            f.write(text)

    @classmethod
    def parse_json(cls, text: str) -> "ResultSet":
        obj = json.loads(text)
        rs = cls(seed=obj["seed"], rng=obj["rng"])
        for r in obj["results"]:
            rs.add(ResultRecord(op=r["op"], params=r["params"], mean=float(r["mean"]),
                                std_error=float(r["std_error"]), reps=int(r["reps"])))
        return rs

    @classmethod
    def parse_csv(cls, text: str) -> "ResultSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != _CSV_HEADER:
            raise ValueError("unrecognized results CSV header")
        rs = None
        for ln in lines[1:]:
            ver, rng, seed, op, rest = ln.split(",", 4)
            params_str, mean, se, reps = rest.rsplit(",", 3)
            params = json.loads(params_str.strip('"').replace("'", '"'))
            if rs is None:
                rs = cls(seed=int(seed), rng=rng)
            rs.add(ResultRecord(op=op, params=params, mean=float(mean),
                                std_error=float(se), reps=int(reps)))
        if rs is None:
            rs = cls(seed=0)
        return rs
