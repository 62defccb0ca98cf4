import pytest

from diftgame import generate, ifg
from diftgame.errors import ParseError, ValidationError


def chain(n=3, stages=((3,),), vulnerable=(1,)):
    return ifg.make_graph(n, [(i, i + 1) for i in range(1, n)], stages, vulnerable)


def test_augment_single_entry_adds_one_edge():
    g = chain()
    aug = ifg.augment_with_source(g)
    assert set(aug.edges) - set(g.edges) == {(0, 1)}
    assert aug.augmented


def test_augment_two_entries_gives_source_out_degree_two():
    g = ifg.make_graph(3, [(1, 3), (2, 3)], [[3]], vulnerable=[1, 2])
    aug = ifg.augment_with_source(g)
    assert aug.successors[0] == (1, 2)


def test_augment_rain_shaped_graph_single_entry():
    g = generate.gen_graph(30, 4, (2, 2, 2, 2), 1, 0.08, seed=3)
    aug = ifg.augment_with_source(g)
    assert len(aug.successors[0]) == 1


def test_augment_twice_rejected():
    aug = ifg.augment_with_source(chain())
    with pytest.raises(ValidationError):
        ifg.augment_with_source(aug)


def test_augment_requires_known_entries():
    g = chain()
    bad = ifg.InformationFlowGraph(
        n=g.n, labels=g.labels, traffic=g.traffic, edges=g.edges,
        stages=g.stages, vulnerable=(9,), rule_relevance=g.rule_relevance,
    )
    with pytest.raises(ValidationError):
        ifg.augment_with_source(bad)


def test_validate_well_formed_graph_is_clean():
    assert ifg.validate(chain()) == []
    assert ifg.validate(ifg.augment_with_source(chain())) == []


def _codes(graph):
    return {v.code for v in ifg.validate(graph)}


def test_validate_flags_edge_into_source():
    g = ifg.augment_with_source(chain())
    bad = ifg.InformationFlowGraph(
        n=g.n, labels=g.labels, traffic=g.traffic, edges=g.edges + ((2, 0),),
        stages=g.stages, vulnerable=g.vulnerable, rule_relevance=g.rule_relevance,
        fractional_traffic=g.fractional_traffic, augmented=True,
    )
    assert "edge-into-source" in _codes(bad)


def test_validate_flags_empty_stage():
    g = chain(stages=((3,), (), (2,)))
    violations = ifg.validate(g)
    assert any(v.code == "empty-stage" and "stage 2" in v.detail for v in violations)


def test_validate_flags_dangling_edge():
    g = chain()
    bad = ifg.InformationFlowGraph(
        n=g.n, labels=g.labels, traffic=g.traffic, edges=g.edges + ((2, 11),),
        stages=g.stages, vulnerable=g.vulnerable, rule_relevance=g.rule_relevance,
    )
    assert "dangling-edge" in _codes(bad)


def test_validate_flags_negative_traffic_and_bad_sum():
    g = ifg.make_graph(2, [(1, 2)], [[2]], [1], traffic=[-0.2, 0.5], fractional_traffic=True)
    codes = _codes(g)
    assert "negative-traffic" in codes
    assert "traffic-sum" in codes


def test_validate_flags_rule_out_of_range():
    g = ifg.make_graph(2, [(1, 2)], [[2]], [1], rule_relevance=[(1, 7), ()])
    assert "rule-out-of-range" in _codes(g)


def test_validate_flags_unknown_destination():
    g = chain(stages=((9,),))
    assert "unknown-destination" in _codes(g)


def test_validate_flags_wrong_source_degree():
    g = ifg.augment_with_source(ifg.make_graph(3, [(1, 3), (2, 3)], [[3]], [1, 2]))
    missing = ifg.InformationFlowGraph(
        n=g.n, labels=g.labels, traffic=g.traffic,
        edges=tuple(e for e in g.edges if e != (0, 2)),
        stages=g.stages, vulnerable=g.vulnerable, rule_relevance=g.rule_relevance,
        fractional_traffic=g.fractional_traffic, augmented=True,
    )
    assert "source-degree" in _codes(missing)


def test_validate_flags_empty_and_unknown_vulnerable():
    g = chain()
    empty = ifg.InformationFlowGraph(
        n=g.n, labels=g.labels, traffic=g.traffic, edges=g.edges,
        stages=g.stages, vulnerable=(), rule_relevance=g.rule_relevance,
    )
    assert "empty-vulnerable" in _codes(empty)
    unknown = ifg.InformationFlowGraph(
        n=g.n, labels=g.labels, traffic=g.traffic, edges=g.edges,
        stages=g.stages, vulnerable=(8,), rule_relevance=g.rule_relevance,
    )
    assert "unknown-vulnerable" in _codes(unknown)


def test_save_load_round_trip(tmp_path):
    g = ifg.make_graph(
        5, [(1, 2), (2, 3), (3, 4), (2, 5)], [[4], [5]], [1],
        traffic=[0.1, 0.3, 0.2, 0.25, 0.15], rule_relevance=[(1,), (1,), (1, 2), (), (1,)],
        fractional_traffic=True,
    )
    path = tmp_path / "g.json"
    ifg.save(g, path)
    assert ifg.load(path) == g


def test_save_load_round_trip_augmented(tmp_path):
    g = ifg.augment_with_source(chain())
    path = tmp_path / "aug.json"
    ifg.save(g, path)
    assert ifg.load(path) == g


def test_load_malformed_stage_names_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"nodes": [{"id": 1}], "edges": [], "stages": [[1], "oops"], "vulnerable": [1]}'
    )
    with pytest.raises(ParseError) as err:
        ifg.load(path)
    assert "stages" in str(err.value)


def test_load_rejects_non_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("not json {")
    with pytest.raises(ParseError):
        ifg.load(path)


def test_load_requires_contiguous_ids(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"nodes": [{"id": 1}, {"id": 3}], "edges": [], "stages": [[1]], "vulnerable": [1]}'
    )
    with pytest.raises(ParseError) as err:
        ifg.load(path)
    assert "id" in str(err.value)


def test_generator_output_loads_clean(tmp_path, rng):
    for seed in range(3):
        g = generate.gen_graph(12, 2, (2, 1), 2, 0.1, seed=seed)
        assert ifg.validate(g) == []
        path = tmp_path / f"gen{seed}.json"
        ifg.save(g, path)
        loaded = ifg.load(path)
        assert loaded == g
        assert ifg.validate(loaded) == []


def test_export_dot_no_edges():
    g = ifg.make_graph(2, [], [[2]], [1])
    text = ifg.export_dot(g)
    assert "->" not in text
    assert text.count("[") == 2  # one statement per node


def test_export_dot_chain_edge_count():
    text = ifg.export_dot(chain())
    assert text.count("->") == 2


def test_export_dot_marks_destinations_and_entries():
    text = ifg.export_dot(chain())
    assert "D1" in text
    assert "peripheries=3" in text


def test_export_dot_node_statement_count_on_generated_graph():
    g = generate.gen_graph(30, 4, (2, 2, 2, 2), 1, 0.08, seed=3)
    text = ifg.export_dot(g)
    assert sum(1 for line in text.splitlines() if "[" in line and "->" not in line) == 30


def test_export_dot_deterministic():
    g = generate.gen_graph(10, 2, (1, 1), 1, 0.2, seed=1)
    assert ifg.export_dot(g) == ifg.export_dot(g)


def test_relevance_defaults_to_all_rules():
    g = ifg.make_graph(3, [(1, 2)], [[2]], [1])
    assert g.relevance(2) == (1, 2, 3)


def test_entry_reachability_includes_entry_itself():
    g = chain()
    reach = ifg.entry_reachability(g)
    assert reach == ((1,), (1,), (1,))


def test_advance_cascades_through_overlapping_stages():
    g = ifg.make_graph(3, [(1, 2), (2, 3)], [[2], [2, 3]], [1])
    assert g.advance(2, 1) == 3  # node 2 is a destination of stages 1 and 2
    assert g.advance(3, 1) == 1
    assert g.advance(3, 2) == 3
