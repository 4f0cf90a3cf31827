import csv
import io
import math

import numpy as np
import pytest

from cepz.regress import BINS, evaluate


def test_hand_computed():
    r = evaluate([1.0, 3.0], [1.0, 2.0])
    assert r.rmse == math.sqrt(0.5)
    assert r.mae == 0.5
    # delta = [0, 1/3]; median 1/6; abs devs both 1/6
    assert abs(r.sigma_nmad - 1.4826 / 6) < 1e-15
    assert r.outlier_fraction == 0.5


def test_perfect_prediction():
    y = np.array([0.1, 1.5, 2.5, 4.5])
    r = evaluate(y, y)
    assert r.rmse == r.mae == r.sigma_nmad == r.outlier_fraction == 0.0


def test_bins_partition_rows(rng):
    y = np.concatenate([[-0.5, 0.0, 2.0, 4.0], rng.uniform(0, 6, 500)])
    r = evaluate(y + 0.01, y)
    assert sum(m.count for m in r.bins.values()) == y.shape[0]
    assert r.bins["[0,2]"].count == np.sum(y <= 2)
    assert r.bins["(2,4]"].count == np.sum((y > 2) & (y <= 4))
    assert r.bins["(4,inf)"].count == np.sum(y > 4)
    assert [b[0] for b in BINS] == list(r.bins)


def test_empty_bins_omitted():
    r = evaluate([0.5, 1.0], [0.4, 1.1])
    assert list(r.bins) == ["[0,2]"]


def test_csv_and_json():
    r = evaluate([1.0, 3.0, 5.0], [1.0, 2.5, 4.5])
    rows = list(csv.reader(io.StringIO(r.to_csv())))
    assert rows[0] == ["scope", "count", "rmse", "mae", "sigma_nmad", "outlier_fraction"]
    assert [row[0] for row in rows[1:]] == ["all", "[0,2]", "(2,4]", "(4,inf)"]
    assert float(rows[1][2]) == r.rmse
    assert '"overall"' in r.to_json()


@pytest.mark.parametrize(
    "pred,y,msg",
    [
        ([1.0], [1.0, 2.0], "length mismatch"),
        ([], [], "empty"),
        ([0.0], [-1.0], "> -1"),
        ([np.nan], [1.0], "non-finite"),
    ],
)
def test_rejects_bad_input(pred, y, msg):
    with pytest.raises(ValueError, match=msg):
        evaluate(pred, y)
