"""Line-oriented trajectory dumps: one decision per line, tab-separated.

Columns: step, state digest, extended-action index, basis, repeat, reward,
terminal flag.  Consumed by the stats tooling and by equivalence tests.
"""

from __future__ import annotations

from dataclasses import dataclass

HEADER = "# step\tdigest\taction\tbasis\trepeat\treward\tterminal"


@dataclass(frozen=True)
class DecisionRecord:
    step: int
    digest: str
    action_index: int
    basis: int
    repeat: int
    reward: float
    terminal: bool


def format_record(r: DecisionRecord) -> str:
    return f"{r.step}\t{r.digest}\t{r.action_index}\t{r.basis}\t{r.repeat}\t{r.reward:.10g}\t{int(r.terminal)}"


def parse_record(line: str) -> DecisionRecord:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 7:
        raise ValueError(f"malformed trajectory line: {line!r}")
    return DecisionRecord(
        step=int(parts[0]),
        digest=parts[1],
        action_index=int(parts[2]),
        basis=int(parts[3]),
        repeat=int(parts[4]),
        reward=float(parts[5]),
        terminal=bool(int(parts[6])),
    )


def write_trajectory(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for r in records:
            fh.write(format_record(r) + "\n")


def read_trajectory(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            records.append(parse_record(line))
    return records
