from __future__ import annotations

import typing as t

import numpy as np
import numpy.typing as npt

BoolArray = npt.NDArray[np.bool_]
ComplexArray = npt.NDArray[np.complex128]
FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

DealiasRule = t.Literal["none", "two-thirds"]
Form = t.Literal[
    "primal", "integrated_adopted", "integrated_plain", "colehopf", "colehopf_plain"
]
GraphMethod = t.Literal["aim_fixed_point", "lyapunov_perron"]
NormKind = t.Literal["L2", "Linf", "Lp", "Hs"]
Projection = t.Literal["P", "Q"]
Scheme = t.Literal["ifrk4", "imex_cnab2"]
Stratum = t.Literal["in_ball", "boundary", "far_field"]
Subcommand = t.Literal[
    "simulate",
    "equivalence",
    "dispersion",
    "gaps",
    "absorb",
    "prepare",
    "manifold",
    "squeeze",
]
SymbolKind = t.Literal["zero", "bse", "qse", "kse", "custom"]
Wavevector = t.Union[int, t.Tuple[int, ...]]


class SnapshotMeta(t.TypedDict):
    d: int
    N: int
    L: float
    time: float
    form: str
    zero_mean: bool
    mean: float
    field: t.Literal["phi", "psi"]


class StratumStats(t.TypedDict):
    pairs: int
    skipped: int
    C_est: float


class ProbeReportDict(t.TypedDict):
    C_est: float
    n_pairs: int
    seed: int
    strata: dict[str, StratumStats]
    sup_N: float


class ColumnDoc(t.TypedDict):
    name: str
    unit: str
    description: str
