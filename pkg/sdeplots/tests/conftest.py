import csv

import pytest

HEADER = "experiment,drift,noise_a,noise_b,R,eps,dt,t,estimate,stderr,M,seed,walltime_s"


def write_csv(path, rows, header=HEADER):
    """rows: list of dicts keyed by column name; missing columns left empty."""
    columns = header.split(",")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])
    return path


@pytest.fixture
def scaling_csv(tmp_path):
    rows = [
        {"experiment": "exp_moment", "eps": e, "estimate": e**-0.5, "M": 100, "seed": 1}
        for e in (0.01, 0.02, 0.04, 0.08, 0.16)
    ]
    return write_csv(tmp_path / "scaling.csv", rows)


@pytest.fixture
def fan_csv(tmp_path):
    rows = []
    for x0 in (0.2, 0.5, 0.8):
        for k in range(11):
            t = k / 10.0
            rows.append(
                {
                    "experiment": "exact_characteristic",
                    "t": t,
                    "dt": 0.1,
                    "estimate": x0 * (1.0 - t) ** 2,
                    "seed": 1,
                }
            )
    return write_csv(tmp_path / "fan.csv", rows)


@pytest.fixture
def margins_csv(tmp_path):
    rows = [
        {"experiment": "gronwall", "t": 1.0, "estimate": 1.0 + 0.37 * i, "seed": 1}
        for i in range(40)
    ]
    return write_csv(tmp_path / "margins.csv", rows)
