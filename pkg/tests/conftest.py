"""Shared fixtures: the published reference grid used for regression checks.

tests/data/reference_grid.tsv holds the 360 published (k, delta_u, sigma, P_r,
gamma) -> (p, q, r_squared, takeoff) rows verbatim from the source document,
decimal commas included; load_reference_grid normalizes them to floats.
"""

from __future__ import annotations

import pathlib
from typing import NamedTuple

import pytest

DATA_DIR = pathlib.Path(__file__).parent / "data"


class ReferenceRow(NamedTuple):
    k: int
    delta_u: float
    sigma: str  # "compact" | "intermediate" | "uniform"
    p_r: float
    gamma: int
    p: float
    q: float
    r_squared: float
    takeoff: float


def _num(cell: str) -> float:
    return float(cell.replace(",", "."))


def load_reference_grid() -> list[ReferenceRow]:
    lines = (DATA_DIR / "reference_grid.tsv").read_text(encoding="utf-8").splitlines()
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        c = line.split("\t")
        rows.append(
            ReferenceRow(
                k=int(c[0]),
                delta_u=_num(c[1]),
                sigma=c[2].lower(),
                p_r=_num(c[3]),
                gamma=int(c[4]),
                p=_num(c[5]),
                q=_num(c[6]),
                r_squared=_num(c[7]),
                takeoff=_num(c[8]),
            )
        )
    return rows


@pytest.fixture(scope="session")
def reference_grid() -> list[ReferenceRow]:
    rows = load_reference_grid()
    assert len(rows) == 360
    return rows
