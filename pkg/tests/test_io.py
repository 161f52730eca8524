import json
import math

import numpy as np
import pytest

from synthnull import HMeasure, RayMeasureSlice
from synthnull.corpus import random_bump_instance, random_penrose_instance
from synthnull.errors import InputError
from synthnull.io import (
    read_hypersurface, read_measure, write_csv, write_hypersurface, write_measure, write_report,
)
from synthnull.smooth import cone_hypersurface, sphere_boundary_hypersurface


def _same(H, G):
    assert H.ids == G.ids
    assert H.tip_rays == G.tip_rays and H.dimension_hint == G.dimension_hint
    for a, b in zip(H.rays, G.rays):
        assert a.weight == b.weight and a.interval == b.interval
        assert a.density.power == b.density.power
        assert np.array_equal(a.density.knots, b.density.knots)
        assert np.array_equal(a.density.values, b.density.values)
        if a.embedding is None:
            assert b.embedding is None
        else:
            assert np.array_equal(a.embedding, b.embedding)


@pytest.mark.parametrize("make", [
    lambda: cone_hypersurface(4, 10.0, K=8),
    lambda: sphere_boundary_hypersurface(2.0, 0.0, ingoing=True, K=4),
    lambda: random_bump_instance(np.random.default_rng(3), 3.3),
    lambda: random_penrose_instance(np.random.default_rng(4))[0],
])
def test_hypersurface_round_trip_is_bit_exact(tmp_path, make):
    H = make()
    p = tmp_path / "h.snh"
    write_hypersurface(p, H)
    G = read_hypersurface(p)
    _same(H, G)
    q = tmp_path / "g.snh"
    write_hypersurface(q, G)
    assert p.read_bytes() == q.read_bytes()


def test_infinite_b_is_written_as_a_string(tmp_path):
    p = tmp_path / "c.snh"
    write_hypersurface(p, cone_hypersurface(3, 1.0, K=2))
    doc = json.loads(p.read_text())
    assert doc["rays"][0]["interval"]["b"] == "inf"


def test_measure_round_trip(tmp_path):
    mu = HMeasure((RayMeasureSlice("a", [0.1, 0.7, 1 / 3 + 1], [0.3, 1 / 7],
                                   ((2.5, 0.01),)),), tip_mass=1 / 9)
    p = tmp_path / "m.json"
    write_measure(p, mu)
    back = read_measure(p)
    assert back.tip_mass == mu.tip_mass
    s, t = mu.slices[0], back.slices[0]
    assert np.array_equal(s.knots, t.knots) and np.array_equal(s.values, t.values)
    assert s.atoms == t.atoms


@pytest.mark.parametrize("text,where", [
    ("{", "line"),
    ('{"format": "synthnull.hypersurface/1", "rays": [{"id": "r", "weight": 1, '
     '"interval": {"a": 0, "b": 1, "has_initial": true, "has_final": false}, '
     '"knots": [0, 1], "values": [1, "x"]}]}', "values"),
    ('{"format": "other", "rays": []}', "format"),
])
def test_malformed_files_name_the_problem(tmp_path, text, where):
    p = tmp_path / "bad.snh"
    p.write_text(text)
    with pytest.raises(InputError) as exc:
        read_hypersurface(p)
    assert where in str(exc.value)


def test_missing_file_is_an_input_error(tmp_path):
    with pytest.raises(InputError):
        read_hypersurface(tmp_path / "nope.snh")


def test_reports_and_csv(tmp_path):
    rep = {"b": math.inf, "a": [np.float64(1.5), np.int64(2)], "nested": {"x": None}}
    write_report(tmp_path / "r.json", rep, timestamp=False)
    doc = json.loads((tmp_path / "r.json").read_text())
    assert list(doc) == ["a", "b", "nested"] and doc["b"] == "inf"
    write_report(tmp_path / "t.json", rep)
    assert "generated_at" in json.loads((tmp_path / "t.json").read_text())
    write_csv(tmp_path / "x.csv", ["s", "t"], [(0.1, 1 / 3)])
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines[0] == "s,t" and float(lines[1].split(",")[1]) == 1 / 3
