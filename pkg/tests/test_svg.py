import xml.etree.ElementTree as ET

import numpy as np

from cspath.svg import band_chart, heatmap, path_overlay

NS = "{http://www.w3.org/2000/svg}"


def test_band_chart_is_valid_and_deterministic():
    series = [("a", [1, 2, 3], [0.5, 0.4, 0.2], [0.1, 0.0, 0.05]),
              ("b", [3, 1], [0.3, 0.6], [0.0, 0.0])]
    text = band_chart(series, "L", "MSE", "t")
    assert text == band_chart(series, "L", "MSE", "t")
    root = ET.fromstring(text)
    assert len(root.findall(f"{NS}polyline")) == 2
    assert len(root.findall(f"{NS}circle")) == 5


def test_band_chart_constant_series():
    root = ET.fromstring(band_chart([("c", [1, 1], [2, 2], [0, 0])], "x", "y"))
    assert root.tag == f"{NS}svg"


def test_heatmap_cells_and_gray_levels():
    root = ET.fromstring(heatmap(np.array([[0.0, 1.0], [0.5, 2.0]]), cell=4))
    fills = [r.get("fill") for r in root.findall(f"{NS}rect")]
    assert fills == ["#000000", "#ffffff", "#808080", "#ffffff"]


def test_path_overlay_marks_every_waypoint():
    path = [(0, 0), (0, 2), (1, 2)]
    root = ET.fromstring(path_overlay(2, 3, path, cell=10))
    assert len(root.findall(f"{NS}rect")) == 6 + 3
    pts = root.find(f"{NS}polyline").get("points").split()
    assert pts == ["5.0,5.0", "25.0,5.0", "25.0,15.0"]
