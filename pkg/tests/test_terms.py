import itertools
import json
import math

import numpy as np
import pytest

from diergm import (
    AB2Star,
    AttributeTable,
    DirectedGraph,
    Edges,
    GwDsp,
    GwEsp,
    GwInDegree,
    GwOutDegree,
    Inhomo2Star,
    ModelSpec,
    Mutual,
    NodeMatch,
    NodeMix,
    UnknownGroupError,
    CollinearModelWarning,
    change_score,
    change_vector,
    eval_stat,
    load_model,
    save_model,
    weighted_change,
)

from conftest import random_attrs, random_graph, term_zoo
import oracle


def test_fig1_configuration(fig1):
    g, attrs = fig1
    assert eval_stat(Inhomo2Star(), g, attrs) == 1
    assert eval_stat(AB2Star(0, 1), g, attrs) == 1


def test_fig1_changescore_without_first_edge(fig1):
    g, attrs = fig1
    g.toggle_edge(0, 1)  # drop the i->j edge, keep j->k
    assert change_score(Inhomo2Star(), g, attrs, 0, 1) == 1


def test_all_within_group_ties_give_zero_inhomo2star():
    g = DirectedGraph(6)
    attrs = AttributeTable([0, 0, 0, 1, 1, 1])
    for i, j in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5)]:
        g.toggle_edge(i, j)
    assert eval_stat(Inhomo2Star(), g, attrs) == 0


def test_all_cross_group_ties_give_zero_inhomo2star():
    g = DirectedGraph(6)
    attrs = AttributeTable([0, 0, 0, 1, 1, 1])
    for i, j in [(0, 3), (3, 1), (1, 4), (4, 2), (5, 0)]:
        g.toggle_edge(i, j)
    assert eval_stat(Inhomo2Star(), g, attrs) == 0


def test_stats_match_naive_references():
    rng = np.random.default_rng(101)
    for _ in range(40):
        n = int(rng.integers(3, 9))
        g = random_graph(rng, n, density=rng.uniform(0.1, 0.6))
        attrs = random_attrs(rng, n)
        A = oracle.to_matrix(g)
        grp = attrs.groups
        for term in term_zoo():
            got = eval_stat(term, g, attrs)
            want = oracle.ref_stat(term, A, grp)
            if isinstance(got, int):
                assert got == want, term.label()
            else:
                assert abs(got - want) < 1e-9, term.label()


def test_changescores_match_definition_oracle():
    rng = np.random.default_rng(202)
    for _ in range(25):
        n = int(rng.integers(3, 9))
        g = random_graph(rng, n, density=rng.uniform(0.1, 0.6))
        attrs = random_attrs(rng, n)
        A = oracle.to_matrix(g)
        grp = attrs.groups
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for term in term_zoo():
                    got = change_score(term, g, attrs, i, j)
                    want = oracle.ref_change(term, A, grp, i, j)
                    if isinstance(got, int):
                        assert got == want, (term.label(), i, j)
                    else:
                        assert abs(got - want) < 1e-9, (term.label(), i, j)


def test_change_vector_trivial_cases():
    attrs = AttributeTable([0, 0, 0])
    g = DirectedGraph(3)
    model = ModelSpec([Edges()])
    assert change_vector(model, g, attrs, 0, 1).tolist() == [1.0]

    model = ModelSpec([Edges(), Mutual()])
    g = DirectedGraph(3)
    g.toggle_edge(1, 0)  # only j->i present; completing the pair
    assert change_vector(model, g, attrs, 0, 1).tolist() == [1.0, 1.0]


def test_change_vector_matches_statistic_differences():
    rng = np.random.default_rng(303)
    g = random_graph(rng, 22, density=0.2)
    attrs = AttributeTable([0] * 13 + [1] * 9, ["boy", "girl"])
    model = ModelSpec(
        [Inhomo2Star(), NodeMix(0, 1), NodeMix(1, 0), GwEsp(0.803), Mutual(), NodeMatch()]
    )
    for _ in range(25):
        i = int(rng.integers(22))
        j = int(rng.integers(21))
        if j >= i:
            j += 1
        vec = change_vector(model, g, attrs, i, j)
        on = g.copy()
        if not on.has_edge(i, j):
            on.toggle_edge(i, j)
        off = g.copy()
        if off.has_edge(i, j):
            off.toggle_edge(i, j)
        brute = model.statistics(on, attrs) - model.statistics(off, attrs)
        assert np.allclose(vec, brute, atol=1e-9)


def test_weighted_change_matches_dot_product():
    rng = np.random.default_rng(99)
    g = random_graph(rng, 10, density=0.3)
    attrs = random_attrs(rng, 10, n_groups=2)
    model = ModelSpec([Edges(), Mutual(), Inhomo2Star(), GwEsp(0.5)])
    theta = [-1.5, 0.8, -0.4, 0.3]
    for i, j in [(0, 1), (3, 7), (9, 2)]:
        direct = weighted_change(model, theta, g, attrs, i, j)
        dotted = float(np.dot(theta, change_vector(model, g, attrs, i, j)))
        assert abs(direct - dotted) < 1e-12


def test_group_relabeling_symmetry():
    rng = np.random.default_rng(404)
    for _ in range(20):
        n = int(rng.integers(4, 9))
        g = random_graph(rng, n, density=0.4)
        attrs = random_attrs(rng, n, n_groups=3)
        perm = list(rng.permutation(3))
        relabeled = AttributeTable([perm[c] for c in attrs.groups])
        for term in (Inhomo2Star(), NodeMatch(), GwEsp(0.5)):
            assert eval_stat(term, g, attrs) == pytest.approx(
                eval_stat(term, g, relabeled), abs=1e-12
            )
        a, b = 0, 1
        assert eval_stat(AB2Star(a, b), g, attrs) == eval_stat(
            AB2Star(perm[a], perm[b]), g, relabeled
        )


def test_inhomo2star_decomposes_into_ab2stars():
    rng = np.random.default_rng(505)
    for _ in range(20):
        n = int(rng.integers(4, 9))
        g = random_graph(rng, n, density=0.4)
        attrs = random_attrs(rng, n)
        k = attrs.n_groups
        total = sum(
            eval_stat(AB2Star(a, b), g, attrs)
            for a, b in itertools.permutations(range(k), 2)
        )
        assert total == eval_stat(Inhomo2Star(), g, attrs)


def test_counting_statistics_are_nonnegative_integers():
    rng = np.random.default_rng(606)
    g = random_graph(rng, 8, density=0.5)
    attrs = random_attrs(rng, 8, n_groups=2)
    for term in (Edges(), Mutual(), NodeMatch(), NodeMix(0, 1), Inhomo2Star(), AB2Star(0, 1)):
        value = eval_stat(term, g, attrs)
        assert isinstance(value, int)
        assert value >= 0


def test_interleaved_toggles_and_evaluations_are_transparent():
    rng = np.random.default_rng(707)
    g = DirectedGraph(8)
    attrs = random_attrs(rng, 8, n_groups=2)
    terms = term_zoo()
    for _ in range(120):
        i = int(rng.integers(8))
        j = int(rng.integers(7))
        if j >= i:
            j += 1
        g.toggle_edge(i, j)
        fresh = DirectedGraph(8)
        for a, b in g.edges():
            fresh.toggle_edge(a, b)
        for term in terms:
            assert eval_stat(term, g, attrs) == pytest.approx(
                eval_stat(term, fresh, attrs), abs=1e-12
            )


def test_term_parameter_validation():
    with pytest.raises(ValueError):
        NodeMix(1, 1)
    with pytest.raises(ValueError):
        AB2Star(0, 0)
    with pytest.raises(ValueError):
        GwEsp(-0.1)
    with pytest.raises(ValueError):
        GwInDegree(float("nan"))


def test_unknown_group_code_rejected():
    g = DirectedGraph(3)
    attrs = AttributeTable([0, 0, 1])
    with pytest.raises(UnknownGroupError):
        eval_stat(NodeMix(0, 2), g, attrs)


def test_self_loop_changescore_rejected():
    g = DirectedGraph(3)
    attrs = AttributeTable([0, 0, 1])
    with pytest.raises(ValueError):
        change_score(Edges(), g, attrs, 1, 1)


def test_model_spec_rejects_duplicates():
    with pytest.raises(ValueError):
        ModelSpec([Edges(), Edges()])


def test_collinear_model_warning():
    attrs = AttributeTable([0, 0, 1, 1])
    full = ModelSpec([Edges(), NodeMatch(), NodeMix(0, 1), NodeMix(1, 0)])
    with pytest.warns(CollinearModelWarning):
        full.validate_against(attrs)
    ok = ModelSpec([Edges(), NodeMatch(), NodeMix(0, 1)])
    ok.validate_against(attrs)  # no warning


def test_model_json_roundtrip(tmp_path):
    attrs = AttributeTable([0] * 3 + [1] * 3, ["boy", "girl"])
    model = ModelSpec(
        [Edges(), Mutual(), NodeMix(1, 0), AB2Star(1, 0), GwEsp(0.803), Inhomo2Star()]
    )
    theta = [-2.0, 1.102, -3.495, -0.5, 0.475, -0.386]
    path = tmp_path / "model.json"
    save_model(model, path, theta=theta, attrs=attrs)
    data = json.loads(path.read_text())
    assert data[2] == {"kind": "nodemix", "from": "girl", "to": "boy", "theta": -3.495}
    loaded, loaded_theta = load_model(path, attrs)
    assert loaded == model
    assert np.allclose(loaded_theta, theta)


def test_model_json_label_resolution_and_errors(tmp_path):
    attrs = AttributeTable([0, 0, 1], ["blue", "pink"])
    model, theta = load_model(
        [{"kind": "ab2star", "A": "pink", "B": "blue"}, {"kind": "edges"}], attrs
    )
    assert model.terms[0] == AB2Star(1, 0)
    assert theta is None
    with pytest.raises(UnknownGroupError):
        load_model([{"kind": "ab2star", "A": "green", "B": "blue"}], attrs)
    with pytest.raises(ValueError):
        load_model([{"kind": "wobble"}], attrs)
    with pytest.raises(ValueError):
        load_model([{"kind": "edges", "theta": -2.0}, {"kind": "mutual"}], attrs)
