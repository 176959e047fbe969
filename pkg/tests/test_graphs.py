import numpy as np
import pytest
from hypothesis import given, strategies as st

from anonfp.graphs import (FormatError, IngestionError, MolecularGraph, degree_view,
                           parse_tu_dataset, transition_view, write_tu_dataset)
from anonfp.synthetic import ring_dataset


def test_degree_examples(k3, p3):
    assert degree_view(k3).degrees.tolist() == [2, 2, 2]
    assert degree_view(p3).degrees.tolist() == [1, 2, 1]
    assert degree_view(MolecularGraph(0, 1, ())).degrees.tolist() == [0]


def test_transition_examples(k3, p3):
    for row in transition_view(k3).rows:
        assert [p for _, p in row] == [0.5, 0.5]
    assert dict(transition_view(p3).rows[1]) == {0: 0.5, 2: 0.5}
    assert transition_view(MolecularGraph(0, 1, ())).rows == [[]]


@st.composite
def graphs(draw, max_nodes=12):
    n = draw(st.integers(1, max_nodes))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return MolecularGraph(0, n, tuple(chosen))


@given(graphs())
def test_degree_and_transition_properties(g):
    deg = degree_view(g).degrees
    assert deg.sum() == 2 * g.n_edges
    sums = transition_view(g).row_sums()
    assert np.allclose(sums[deg > 0], 1.0, atol=1e-12)
    assert np.all(sums[deg == 0] == 0)


def test_invalid_graphs_rejected():
    with pytest.raises(ValueError):
        MolecularGraph(0, 2, ((0, 0),))
    with pytest.raises(ValueError):
        MolecularGraph(0, 2, ((0, 2),))
    with pytest.raises(ValueError):
        MolecularGraph(0, 2, ((0, 1), (1, 0)))


def test_parse_triangle(tmp_path, tu_writer):
    root = tu_writer(tmp_path / "tri", "TRI", [(1, 2), (2, 3), (1, 3)], [1, 1, 1], [1])
    gs = parse_tu_dataset(root, "TRI")
    assert len(gs) == 1
    assert gs[0].n_nodes == 3 and gs[0].n_edges == 3


def test_parse_remaps_and_dedups(tmp_path, tu_writer):
    # graph 1: nodes 1-3 path; graph 2: nodes 4-5 single edge, listed both ways
    edges = [(1, 2), (2, 1), (2, 3), (3, 2), (4, 5), (5, 4)]
    root = tu_writer(tmp_path / "d", "D", edges, [1, 1, 1, 2, 2], [-1, 1], node_labels=[6, 6, 7, 8, 8])
    gs = parse_tu_dataset(root, "D")
    assert [g.n_nodes for g in gs] == [3, 2]
    assert gs[0].edges == ((0, 1), (1, 2))
    assert gs[1].edges == ((0, 1),)
    assert [g.label for g in gs] == [0, 1]
    assert gs[1].node_labels == (8, 8)
    assert gs.class_counts == {0: 1, 1: 1}


@pytest.mark.parametrize("raw,expected", [([-1, 1, 1], [0, 1, 1]), ([2, 1, 2], [1, 0, 1])])
def test_label_normalization(tmp_path, tu_writer, raw, expected):
    root = tu_writer(tmp_path / "l", "L", [(1, 2), (3, 4), (5, 6)], [1, 1, 2, 2, 3, 3], raw)
    assert parse_tu_dataset(root, "L").labels.tolist() == expected


def test_missing_file_named(tmp_path, tu_writer):
    root = tu_writer(tmp_path / "m", "M", [(1, 2)], [1, 1], [1])
    (root / "M_graph_labels.txt").unlink()
    with pytest.raises(IngestionError, match="M_graph_labels.txt"):
        parse_tu_dataset(root, "M")
    with pytest.raises(IngestionError):
        parse_tu_dataset(tmp_path / "nowhere", "M")


def test_dangling_and_cross_graph_edges(tmp_path, tu_writer):
    root = tu_writer(tmp_path / "a", "A", [(1, 2), (2, 9)], [1, 1], [1])
    with pytest.raises(FormatError, match=r"A_A.txt:2"):
        parse_tu_dataset(root, "A")
    root = tu_writer(tmp_path / "b", "B", [(1, 2), (2, 3)], [1, 1, 2], [0, 1])
    with pytest.raises(FormatError, match=r"B_A.txt:2.*crosses"):
        parse_tu_dataset(root, "B")


def test_manifest_check():
    gs = ring_dataset(10)
    gs.check_manifest(10, 5)
    with pytest.raises(FormatError):
        gs.check_manifest(11)
    with pytest.raises(FormatError):
        gs.check_manifest(n_positive=4)


def test_round_trip(tmp_path):
    gs = ring_dataset(20, seed=3, name="RT")
    write_tu_dataset(gs, tmp_path, "RT")
    back = parse_tu_dataset(tmp_path, "RT")
    assert back == gs
    write_tu_dataset(back, tmp_path / "again", "RT")
    assert parse_tu_dataset(tmp_path / "again", "RT") == gs


def test_relabeled_files_give_isomorphic_sets(tmp_path, tu_writer):
    gs = ring_dataset(6, seed=4)
    write_tu_dataset(gs, tmp_path / "orig", "R")
    # permute global node ids inside every graph: reverse each graph's block
    edges, indicator = [], []
    offset = 0
    for gi, g in enumerate(gs):
        perm = list(range(g.n_nodes))[::-1]
        edges += [(perm[u] + offset + 1, perm[v] + offset + 1) for u, v in g.edges]
        indicator += [gi + 1] * g.n_nodes
        offset += g.n_nodes
    tu_writer(tmp_path / "perm", "R", edges, indicator, [g.label for g in gs])
    a = parse_tu_dataset(tmp_path / "orig", "R")
    b = parse_tu_dataset(tmp_path / "perm", "R")
    for ga, gb in zip(a, b):
        assert ga.n_edges == gb.n_edges
        assert sorted(ga.degrees()) == sorted(gb.degrees())


def test_summary_columns():
    s = ring_dataset(10).summary()
    assert set(s) == {"dataset", "graphs", "positive", "classes", "mean_nodes", "mean_edges"}
