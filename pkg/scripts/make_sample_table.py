"""Regenerate the synthetic sample mortality table shipped with nneg.

Gompertz force of mortality mu(x) = B * c**x integrated over each year of
age, giving qx = 1 - exp(-B * c**x * (c - 1) / ln c). The final age is
forced to qx = 1 so the table has a terminal age. Values are rounded to
six decimals.

    python scripts/make_sample_table.py > src/nneg/data/sample_mortality.csv
"""

import math
import sys

FIRST_AGE = 70
TERMINAL_AGE = 110
# mu(70) = 0.02, mortality grows 10% per year of age
C = 1.10
B = 0.02 / C**FIRST_AGE


def qx(age: int) -> float:
    if age == TERMINAL_AGE:
        return 1.0
    hazard = B * C**age * (C - 1.0) / math.log(C)
    return 1.0 - math.exp(-hazard)


def main(out=sys.stdout) -> None:
    out.write("age,qx\n")
    for age in range(FIRST_AGE, TERMINAL_AGE + 1):
        out.write(f"{age},{qx(age):.6f}\n")


if __name__ == "__main__":
    main()
