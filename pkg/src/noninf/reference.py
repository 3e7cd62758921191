"""Published reference values used by the ``tables`` command and the acceptance suite.

Type I errors and interval bounds are in percent, as printed (2 decimals);
p-values are as printed (4 decimals).  Allocation ratios are ``(test, control)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

TYPE1_COLUMNS = ("wald", "ac", "ha", "ncc", "nc", "als", "els")


@dataclass(frozen=True)
class Type1Row:
    table: int
    power: float
    margin: float
    allocation: tuple[int, int]
    p_control: float
    n_test: int
    values: dict

    @property
    def n_control(self) -> int:
        t, c = self.allocation
        return -(-self.n_test * c // t)

    @property
    def label(self) -> str:
        t, c = self.allocation
        return f"T{self.table} d={self.margin:.2f} {t}:{c} Pc={self.p_control:.2f} Nt={self.n_test}"


def _rows(table, power, text):
    out = []
    margin = ratio = None
    for line in text.strip().splitlines():
        parts = line.split()
        if parts[0].startswith("d="):
            margin = float(parts.pop(0)[2:])
        if ":" in parts[0]:
            t, c = parts.pop(0).split(":")
            ratio = (int(t), int(c))
        p_control, n_test, *vals = parts
        out.append(Type1Row(table, power, margin, ratio, float(p_control), int(n_test),
                            dict(zip(TYPE1_COLUMNS, map(float, vals)))))
    return out


TABLE1 = _rows(1, 0.80, """
d=0.10 1:2 0.25 207 2.21 2.45 1.83 2.31 2.77 2.65 2.49
0.40 275 2.34 2.50 2.06 2.30 2.62 2.56 2.48
0.60 285 2.46 2.47 2.19 2.18 2.46 2.44 2.44
0.75 233 2.70 2.60 2.34 2.13 2.48 2.44 2.47
0.90 132 3.38 2.80 2.60 1.72 2.33 2.29 2.51
0.95 90 3.94 3.08 3.05 1.41 2.05 2.05 2.39
1:1 0.25 295 2.57 2.57 2.25 2.16 2.57 2.50 2.50
0.40 374 2.46 2.54 2.27 2.28 2.57 2.51 2.46
0.60 374 2.37 2.43 2.36 2.36 2.50 2.40 2.38
0.75 295 2.50 2.54 2.24 2.24 2.58 2.50 2.47
0.90 154 2.78 2.76 2.19 1.97 2.55 2.36 2.47
0.95 99 3.27 2.91 2.47 1.67 2.42 2.32 2.32
2:1 0.25 466 2.88 2.67 2.48 2.02 2.42 2.39 2.48
0.40 570 2.62 2.57 2.31 2.20 2.52 2.47 2.50
0.60 550 2.47 2.48 2.20 2.23 2.54 2.49 2.48
0.75 414 2.29 2.49 1.94 2.27 2.65 2.59 2.48
0.90 194 2.13 2.52 1.52 2.16 2.97 2.69 2.48
0.95 116 2.00 2.67 1.37 1.97 2.88 2.82 2.38
d=0.15 1:2 0.25 90 2.14 2.56 1.49 2.25 2.94 2.57 2.46
0.40 120 2.22 2.48 1.81 2.26 2.76 2.63 2.48
0.60 127 2.61 2.61 2.12 2.20 2.61 2.61 2.47
0.75 106 2.76 2.67 2.22 2.03 2.53 2.46 2.50
0.90 65 3.55 2.87 2.56 1.65 2.22 2.19 2.51
0.95 131 2.75 2.77 2.14 1.96 2.56 2.37 2.50
1:1 0.25 165 2.47 2.63 2.11 2.16 2.66 2.58 2.52
0.40 165 2.38 2.76 2.13 2.13 2.76 2.81 2.50
0.60 131 2.50 2.59 2.12 2.18 2.67 2.50 2.42
0.75 73 2.78 2.74 2.08 1.83 2.73 2.37 2.38
0.90 212 3.20 2.91 2.60 1.81 2.36 2.27 2.45
0.95 254 2.73 2.65 2.23 2.07 2.52 2.47 2.47
2:1 0.25 240 2.31 2.69 1.92 2.30 2.74 2.62 2.41
0.40 180 2.21 2.50 1.74 2.18 2.78 2.61 2.50
0.60 88 2.02 2.41 1.21 2.27 2.92 2.83 2.41
0.75 289 3.41 2.81 2.82 1.76 2.17 2.17 2.43
0.90 334 2.85 2.62 2.31 1.93 2.41 2.41 2.41
0.95 414 2.14 2.49 1.56 2.14 2.90 2.55 2.40
d=0.05 1:2 0.95 289 3.41 2.81 2.82 1.76 2.17 2.17 2.43
1:1 0.95 334 2.85 2.62 2.31 1.93 2.41 2.41 2.41
2:1 0.95 414 2.14 2.49 1.56 2.14 2.90 2.55 2.40
""")

TABLE2 = _rows(2, 0.90, """
d=0.10 1:2 0.25 280 2.24 2.48 1.89 2.32 2.71 2.59 2.49
0.40 369 2.37 2.50 2.11 2.32 2.61 2.55 2.50
0.60 382 2.46 2.48 2.22 2.21 2.48 2.44 2.44
0.75 310 2.67 2.60 2.35 2.17 2.49 2.46 2.49
0.90 172 3.20 2.79 2.60 1.89 2.33 2.28 2.43
0.95 113 4.03 2.93 2.93 1.52 2.12 2.12 2.31
1:1 0.25 395 2.55 2.60 2.28 2.20 2.57 2.49 2.49
0.40 502 2.46 2.51 2.29 2.31 2.54 2.49 2.48
0.60 502 2.53 2.53 2.20 2.21 2.53 2.53 2.53
0.75 395 2.55 2.60 2.28 2.20 2.57 2.49 2.50
0.90 204 2.71 2.70 2.30 2.01 2.55 2.40 2.46
0.95 128 3.38 2.91 2.34 1.83 2.44 2.31 2.48
2:1 0.25 620 2.83 2.65 2.47 2.11 2.46 2.40 2.47
0.40 764 2.60 2.56 2.33 2.24 2.51 2.49 2.49
0.60 738 2.40 2.57 2.14 2.33 2.58 2.57 2.54
0.75 560 2.31 2.48 2.02 2.32 2.64 2.59 2.47
d=0.15 1:2 0.25 121 2.15 2.56 1.63 2.30 2.82 2.66 2.42
0.40 161 2.25 2.53 1.89 2.30 2.72 2.59 2.47
0.60 169 2.42 2.44 2.08 2.10 2.55 2.42 2.42
0.75 140 2.69 2.62 2.27 2.07 2.55 2.45 2.46
0.90 83 3.35 2.98 2.67 1.70 2.36 2.20 2.36
0.95 154 2.16 2.67 1.29 1.95 2.83 2.59 2.34
1:1 0.25 176 2.67 2.80 2.21 2.08 2.64 2.49 2.49
0.40 221 2.47 2.62 2.17 2.22 2.65 2.51 2.46
0.60 221 2.37 2.38 2.37 2.37 2.47 2.43 2.37
0.75 176 2.50 2.62 2.11 2.16 2.64 2.56 2.50
0.90 96 2.76 2.76 2.28 1.88 2.73 2.47 2.47
0.95 120 1.98 2.40 1.30 2.34 2.94 2.84 2.40
2:1 0.25 280 3.16 2.84 2.54 1.87 2.42 2.28 2.45
0.40 338 2.67 2.63 2.25 2.14 2.54 2.49 2.49
0.60 322 2.31 2.63 1.95 2.26 2.63 2.63 2.58
0.75 242 2.22 2.50 1.81 2.26 2.76 2.62 2.50
d=0.05 1:2 0.95 374 3.30 2.77 2.77 1.82 2.24 2.23 2.47
1:1 0.95 440 2.82 2.65 2.35 2.02 2.48 2.37 2.48
2:1 0.95 560 2.12 2.43 1.62 2.18 2.78 2.62 2.44
""")

# summary of the 72 scenarios, per method: (pct_above, mean_distance, range, min, max,
# mean_at_or_below, mean_above); None where the table prints "--"
TABLE3 = {
    "wald": (49, 0.324, 2.05, 1.98, 4.03, 2.30, 2.95),
    "ac": (74, 0.145, 0.70, 2.38, 3.08, 2.46, 2.68),
    "ha": (14, 0.410, 1.84, 1.21, 3.05, 2.06, 2.71),
    "ncc": (0, 0.401, 0.96, 1.41, 2.37, 2.10, None),
    "nc": (69, 0.161, 0.92, 2.05, 2.97, 2.37, 2.67),
    "als": (42, 0.120, 0.79, 2.05, 2.84, 2.38, 2.62),
    "els": (8, 0.046, 0.27, 2.31, 2.58, 2.45, 2.53),
}


@dataclass(frozen=True)
class AnalysisExample:
    name: str
    counts: tuple[int, int, int, int]  # x_T, N_T, x_C, N_C
    margin: float
    intervals: dict  # method -> (lower %, upper %)
    p_values: dict  # method -> p-value


TABLE4 = (
    AnalysisExample(
        "Example 1", (264, 328, 268, 317), 0.10,
        {"wald": (-9.91, 1.80), "ac": (-9.88, 1.84), "ha": (-10.07, 1.96), "nc": (-9.90, 1.83),
         "ncc": (-10.11, 2.06), "als": (-9.94, 1.83), "els": (-9.94, 1.84)},
        {"als": 0.0238, "els": 0.0239},
    ),
    AnalysisExample(
        "Example 2", (285, 326, 99, 108), 0.10,
        {"wald": (-10.58, 2.09), "ac": (-10.19, 2.76), "ha": (-11.06, 2.58), "nc": (-9.85, 3.21),
         "ncc": (-10.20, 3.78), "als": (-9.98, 3.16), "els": (-10.14, 2.91)},
        {"als": 0.0246, "els": 0.0281},
    ),
    AnalysisExample(
        "Example 3", (411, 435, 426, 441), 0.05,
        {"wald": (-4.85, 0.62), "ac": (-4.89, 0.68), "ha": (-4.97, 0.73), "nc": (-5.00, 0.66),
         "ncc": (-5.16, 0.83), "als": (-5.03, 0.64), "els": (-4.99, 0.66)},
        {"als": 0.0260, "els": 0.0246},
    ),
)


def all_type1_rows():
    return TABLE1 + TABLE2


def duplicated_values(row: Type1Row) -> Type1Row | None:
    """Another printed row with exactly the same seven values, if any.

    A row that repeats the values of a row with a different design cannot
    belong to its own design.
    """
    for other in all_type1_rows():
        if other is not row and other.values == row.values:
            return other
    return None


def size_consistent(row: Type1Row, tolerance: int = 2) -> bool:
    """True if the printed N_T is within ``tolerance`` of the FM size for the row's design."""
    from .operating import SampleSizeSpec, fm_sample_size

    spec = SampleSizeSpec(row.margin, row.p_control, power=row.power, allocation=row.allocation)
    return abs(fm_sample_size(spec)[0] - row.n_test) <= tolerance


# Where a printed row carries the values of a different design, keyed by
# (table, margin, allocation, p_control) of its label, the design it belongs to
# as (margin, allocation, p_control) in the same table.  Each attribution is the
# unique labelled design whose sample size equals the printed N_T and whose
# recomputed type I errors match the printed ones.  In Table 1 the margin-0.15
# rows from "1:2 0.95" onward are shifted by one design and the last three repeat
# the margin-0.05 rows; in Table 2 two rows from missing 2:1 designs are printed
# in the margin-0.15 block.
MISALIGNED = {
    (1, 0.15, (1, 2), 0.95): (0.15, (1, 1), 0.25),
    (1, 0.15, (1, 1), 0.25): (0.15, (1, 1), 0.40),
    (1, 0.15, (1, 1), 0.40): (0.15, (1, 1), 0.60),
    (1, 0.15, (1, 1), 0.60): (0.15, (1, 1), 0.75),
    (1, 0.15, (1, 1), 0.75): (0.15, (1, 1), 0.90),
    (1, 0.15, (1, 1), 0.90): (0.15, (2, 1), 0.25),
    (1, 0.15, (1, 1), 0.95): (0.15, (2, 1), 0.40),
    (1, 0.15, (2, 1), 0.25): (0.15, (2, 1), 0.60),
    (1, 0.15, (2, 1), 0.40): (0.15, (2, 1), 0.75),
    (1, 0.15, (2, 1), 0.60): (0.15, (2, 1), 0.90),
    (1, 0.15, (2, 1), 0.75): (0.05, (1, 2), 0.95),
    (1, 0.15, (2, 1), 0.90): (0.05, (1, 1), 0.95),
    (1, 0.15, (2, 1), 0.95): (0.05, (2, 1), 0.95),
    (2, 0.15, (1, 2), 0.95): (0.10, (2, 1), 0.95),
    (2, 0.15, (1, 1), 0.95): (0.15, (2, 1), 0.90),
}
# rows that match no design: Table 2's 1:1 P_C=0.75 row repeats the P_C=0.25 row
UNATTRIBUTED = {(2, 0.10, (1, 1), 0.75)}
EXCLUDED = set(MISALIGNED) | UNATTRIBUTED


def _key(row: Type1Row):
    return row.table, row.margin, row.allocation, row.p_control


def consistent_rows(max_n_test: int | None = None) -> list[Type1Row]:
    """Rows printed under their own design, optionally limited to ``N_T <= max_n_test``."""
    return [r for r in all_type1_rows()
            if _key(r) not in EXCLUDED and (max_n_test is None or r.n_test <= max_n_test)]


def inconsistent_rows() -> list[Type1Row]:
    return [r for r in all_type1_rows() if _key(r) in EXCLUDED]


def attributed_rows() -> list[Type1Row]:
    """Every printed row relabelled with the design its values belong to.

    Unattributable rows are dropped; the copies of the margin-0.05 rows appear twice.
    """
    out = []
    for r in all_type1_rows():
        key = _key(r)
        if key in UNATTRIBUTED:
            continue
        if key in MISALIGNED:
            margin, allocation, p_control = MISALIGNED[key]
            r = replace(r, margin=margin, allocation=allocation, p_control=p_control)
        out.append(r)
    return out
