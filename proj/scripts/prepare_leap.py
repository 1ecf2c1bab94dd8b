#!/usr/bin/env python3
"""Convert a LEAP trial export into the integer-coded CSV read by itrbounds.

The LEAP data (study ITN032AD) are distributed by the Immune Tolerance Network
TrialShare portal and cannot be redistributed here. Export one row per participant
with the randomized arm, the average weekly peanut protein consumption in grams, the
oral food challenge result at 60 months and the baseline skin-prick test result, then:

    python3 scripts/prepare_leap.py --input leap_export.csv --output data/leap/leap.csv

Column names in the export differ between portal versions, so each one can be set on
the command line. Rows missing any of the four fields are dropped (complete cases);
the number kept is printed.

Output columns:
    arm           0 = avoidance, 1 = consumption
    peanut_bin    0: <= 0.2 g/week, 1: > 0.2 g/week
    peanut_tern   0: <= 0.2 g/week, 1: (0.2, 6] g/week, 2: > 6 g/week
    allergy_60m   1 = allergic at 60 months
    spt_positive  1 = positive baseline skin-prick test
"""

import argparse
import csv
import sys


def code_consumption(grams):
    if grams <= 0.2:
        return 0, 0
    if grams <= 6.0:
        return 1, 1
    return 1, 2


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--arm-column", default="Treatment.group")
    p.add_argument("--consumption-arm", default="Peanut Consumption",
                   help="value of the arm column that marks the consumption group")
    p.add_argument("--grams-column", default="Peanut.protein.per.week")
    p.add_argument("--outcome-column", default="Overall.V60.Outcome")
    p.add_argument("--allergic-value", default="FAIL OFC",
                   help="value of the outcome column that marks an allergic reaction")
    p.add_argument("--spt-column", default="Primary.cohort")
    p.add_argument("--spt-positive-value", default="SPT-positive")
    args = p.parse_args(argv)

    kept, dropped = [], 0
    with open(args.input, newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in (args.arm_column, args.grams_column, args.outcome_column, args.spt_column)
                   if c not in (reader.fieldnames or [])]
        if missing:
            sys.exit(f"input lacks column(s): {', '.join(missing)}")
        for row in reader:
            fields = [row[args.arm_column], row[args.grams_column], row[args.outcome_column], row[args.spt_column]]
            if any(v is None or v.strip() in ("", "NA", ".") for v in fields):
                dropped += 1
                continue
            try:
                grams = float(fields[1])
            except ValueError:
                dropped += 1
                continue
            binary, ternary = code_consumption(grams)
            kept.append({
                "arm": int(fields[0].strip() == args.consumption_arm),
                "peanut_bin": binary,
                "peanut_tern": ternary,
                "allergy_60m": int(fields[2].strip() == args.allergic_value),
                "spt_positive": int(fields[3].strip() == args.spt_positive_value),
            })

    with open(args.output, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["arm", "peanut_bin", "peanut_tern", "allergy_60m", "spt_positive"])
        w.writeheader()
        w.writerows(kept)
    print(f"kept {len(kept)} complete cases, dropped {dropped}", file=sys.stderr)


if __name__ == "__main__":
    main()
