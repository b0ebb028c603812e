import re

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from force2vec.errors import ParseError, ValidationError
from force2vec.graph import load_labels
from force2vec.io import (
    PALETTE,
    UNLABELED,
    align_embedding,
    format_embedding,
    parse_embedding,
    read_embedding,
    render_svg,
    write_embedding,
)


def test_six_decimal_contract(tmp_path):
    path = tmp_path / "z.emb"
    write_embedding(path, np.array([[0.123456789]]))
    assert path.read_text() == "1 1\n0 0.123457\n"
    ids, z = read_embedding(path)
    assert_array_equal(ids, [0])
    assert z[0, 0] == 0.123457


def test_round_trip_stable_at_six_decimals():
    z = np.random.default_rng(0).normal(size=(50, 7))
    ids = np.arange(100, 150)
    text = format_embedding(z, ids)
    back_ids, back = parse_embedding(text)
    assert_array_equal(back_ids, ids)
    assert_allclose(back, z, atol=5e-7)
    assert format_embedding(back, back_ids) == text


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("x y\n", 1),
    ("2 1\n0 0.5\n", 3),
    ("1 1\n0 0.5\n1 0.2\n", 3),
    ("1 2\n0 0.5\n", 2),
    ("1 1\n0 abc\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as err:
        parse_embedding(text)
    assert err.value.line == line


def test_duplicate_ids_and_nan_rejected():
    with pytest.raises(ParseError):
        parse_embedding("2 1\n0 1.0\n0 2.0\n")
    with pytest.raises(ParseError):
        parse_embedding("1 1\n0 nan\n")


def test_align_maps_original_ids():
    ids = np.array([30, 10, 20])
    z = np.array([[3.0], [1.0], [2.0]])
    out = align_embedding(ids, z, {10: 0, 20: 1, 30: 2}, 3)
    assert_array_equal(out[:, 0], [1.0, 2.0, 3.0])
    with pytest.raises(ValidationError):
        align_embedding(ids, z, {10: 0, 20: 1, 30: 2, 40: 3}, 4)
    with pytest.raises(ValidationError):
        align_embedding(ids, z, {10: 0, 20: 1, 31: 2}, 3)


def circles(svg):
    return re.findall(r'<circle cx="([\d.]+)" cy="([\d.]+)" r="[\d.]+" fill="(#[0-9a-f]{6})"/>', svg)


def test_svg_three_points():
    z = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.25]])
    svg = render_svg(z)
    found = circles(svg)
    assert svg.count("<circle") == 3 == len(found)
    xy = [(float(x), float(y)) for x, y, _ in found]
    assert xy == [(0.0, 1000.0), (1000.0, 0.0), (500.0, 750.0)]
    assert 'viewBox="0 0 1000 1000"' in svg
    assert render_svg(z) == svg


def test_svg_two_classes_two_colors():
    z = np.random.default_rng(1).normal(size=(10, 2))
    labels = load_labels("\n".join(f"{i} {i % 2}" for i in range(10)), 10)
    fills = {f for _, _, f in circles(render_svg(z, labels))}
    assert fills == {PALETTE[0], PALETTE[1]}


def test_svg_palette_cycles_and_unlabeled():
    z = np.zeros((3, 2))
    labels = load_labels("0 13\n1 1\n", 3)
    fills = [f for _, _, f in circles(render_svg(z, labels))]
    assert fills == [PALETTE[1], PALETTE[1], UNLABELED]
    assert len(PALETTE) == 12


def test_svg_needs_two_dimensions():
    with pytest.raises(ValidationError, match="--dim 2"):
        render_svg(np.zeros((3, 3)))
