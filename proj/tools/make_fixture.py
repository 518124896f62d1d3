#!/usr/bin/env python3
"""Writes the small raw-layout fixture under data/fixture.

h01/2012-07-01: 18 of 24 hours occupied. Hour 5 has 1801 occupied seconds,
hour 6 has 1799, hour 7 is an exact 1800/1800 tie. Hour 3 has 100 missing
statuses and 100 missing readings (under the 5% limit).
h02/2012-07-02: 12 of 24 hours occupied.
h02/2012-07-03: hour 10 has 10% missing readings, so the day is dropped.
"""
import os
import sys

S = 3600


def value(hour, feature):
    return 1.0 + 0.5 * hour + 10.0 * feature


def write_day(path, missing, header):
    with open(path, "w") as f:
        if header:
            f.write("i1,v1,phi1\n")
        for sec in range(24 * S):
            h = sec // S
            row = []
            for c in range(3):
                row.append("-1" if (sec, c) in missing else f"{value(h, c):g}")
            f.write(",".join(row) + "\n")


def statuses(labels, overrides):
    out = []
    for h, lab in enumerate(labels):
        ones = overrides.get(h, S if lab else 0)
        block = [1] * ones + [0] * (S - ones)
        out.extend(block)
    return out


def main(root):
    # h01
    d = os.path.join(root, "h01", "sm")
    os.makedirs(d, exist_ok=True)
    labels = [0] * 24
    for h in list(range(0, 8)) + list(range(13, 24)):
        labels[h] = 1
    labels[6] = 0
    st = statuses(labels, {5: 1801, 6: 1799, 7: 1800})
    for sec in range(3 * S, 3 * S + 100):
        st[sec] = -1
    assert sum(labels) == 18
    missing = {(3 * S + 200 + i, c) for i in range(100) for c in range(3)}
    write_day(os.path.join(d, "2012-07-01.csv"), missing, header=True)
    with open(os.path.join(root, "h01", "occupancy_summer.csv"), "w") as f:
        f.write("date," + ",".join(str(i) for i in range(24 * S)) + "\n")
        f.write("2012-07-01," + ",".join(str(v) for v in st) + "\n")

    # h02
    d = os.path.join(root, "h02", "sm")
    os.makedirs(d, exist_ok=True)
    labels2 = [1 if 6 <= h < 18 else 0 for h in range(24)]
    st2 = statuses(labels2, {})
    write_day(os.path.join(d, "2012-07-02.csv"), set(), header=False)
    bad = {(10 * S + i, 0) for i in range(360)}
    write_day(os.path.join(d, "2012-07-03.csv"), bad, header=False)
    with open(os.path.join(root, "h02", "occupancy_summer.csv"), "w") as f:
        f.write("02-Jul-2012," + ",".join(str(v) for v in st2) + "\n")
        f.write("03-Jul-2012," + ",".join(str(v) for v in st2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "fixture"))
