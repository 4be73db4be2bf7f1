import random
import re
import xml.etree.ElementTree as ET

import numpy as np

from conftest import random_graph, random_permutation
from hypograph.graph import extract_environment
from hypograph.hypothesis import conditional_histogram
from hypograph.render import render_histogram_svg, render_subgraph_dot

SVG = "{http://www.w3.org/2000/svg}"


def test_svg_is_well_formed_and_counts_bars():
    h = conditional_histogram([1, 1, 0, 0, 0], [0.0, 1.0, 0.0, 0.5, 1.0], bins=4)
    svg = render_histogram_svg(h, caption="Feature <x> & y")
    root = ET.fromstring(svg)
    groups = {g.get("class"): g for g in root.iter(SVG + "g")}
    assert len(groups["present"].findall(SVG + "rect")) == int((h.counts_true > 0).sum())
    assert len(groups["absent"].findall(SVG + "rect")) == int((h.counts_false > 0).sum())
    texts = "".join(t.text or "" for t in root.iter(SVG + "text"))
    assert "Feature <x> & y" in texts
    assert "n1=2" in texts and "n0=3" in texts


def test_bar_heights_are_group_fractions():
    # present group: 1 of 1 in the first bin; absent group: 1 of 2 in each bin
    h = conditional_histogram([1, 0, 0], [0.0, 0.0, 1.0], bins=2)
    root = ET.fromstring(render_histogram_svg(h))
    groups = {g.get("class"): g for g in root.iter(SVG + "g")}
    tall = [float(r.get("height")) for r in groups["present"].findall(SVG + "rect")]
    half = [float(r.get("height")) for r in groups["absent"].findall(SVG + "rect")]
    assert len(tall) == 1 and len(half) == 2
    assert np.allclose(half, tall[0] / 2, atol=0.01)


def test_degenerate_histogram_note():
    h = conditional_histogram([1, 0], [2.0, 2.0])
    svg = render_histogram_svg(h)
    ET.fromstring(svg)
    assert "all targets equal" in svg


def test_svg_deterministic():
    r = np.random.default_rng(0)
    col = r.random(100) < 0.5
    y = r.normal(size=100)
    assert render_histogram_svg(conditional_histogram(col, y)) == render_histogram_svg(conditional_histogram(col, y))


def _dot_structure(text):
    labels = dict(re.findall(r'^\s+(n\d+) \[label="([^"]*)"', text, re.M))
    edges = re.findall(r'^\s+(n\d+) -- (n\d+) \[label="([^"]*)"\]', text, re.M)
    root = re.findall(r"^\s+(n\d+) \[.*fillcolor=gold", text, re.M)
    return labels, edges, root


def test_dot_contains_every_node_and_edge():
    rng = random.Random(1)
    g = random_graph(rng, 9, extra=0.2)
    env = extract_environment(g, 0, 2)
    text = render_subgraph_dot(env, "m")
    labels, edges, root = _dot_structure(text)
    assert text.startswith('graph "m" {') and text.rstrip().endswith("}")
    assert len(labels) == len(env.nodes) and len(edges) == len(env.edges) and len(root) == 1
    assert sorted(labels.values()) == sorted(nl.display() for nl in env.nodes)


def test_dot_independent_of_node_order():
    rng = random.Random(2)
    for _ in range(20):
        g = random_graph(rng, 10, extra=0.2)
        perm = random_permutation(rng, 10)
        h = g.permuted(perm)
        root = rng.randrange(10)
        # node ``root`` of g is node ``perm[root]`` of h
        assert render_subgraph_dot(extract_environment(g, root, 2)) == \
            render_subgraph_dot(extract_environment(h, perm[root], 2))
