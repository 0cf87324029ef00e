import pytest

from saddle_field.exceptions import ConfigError, DomainError
from saddle_field.fields.scenario_tree import NodeRef, ScenarioTree


def leaf(sigma0=0.0, psi=(1.0,)):
    return {"sigma0": sigma0, "psi": list(psi)}


class TestNodeRef:
    def test_parse(self):
        assert NodeRef.parse("1:0") == NodeRef(1, 0)
        assert str(NodeRef(2, 3)) == "2:3"

    @pytest.mark.parametrize("text", ["", "1", "a:b", "1:2:3"])
    def test_parse_rejects(self, text):
        with pytest.raises(DomainError):
            NodeRef.parse(text)

    def test_ordering(self):
        assert sorted([NodeRef(1, 1), NodeRef(0, 0), NodeRef(1, 0)]) == [NodeRef(0, 0), NodeRef(1, 0), NodeRef(1, 1)]


class TestStructure:
    def test_two_period(self, two_period_tree):
        tree = two_period_tree
        assert tree.levels == 2
        assert tree.n_nodes == 7
        assert tree.J == 2
        assert [node.ref for node in tree.leaves] == [NodeRef(2, i) for i in range(4)]
        assert tree.root.children == (NodeRef(1, 0), NodeRef(1, 1))
        assert tree.node(NodeRef(2, 2)).parent == NodeRef(1, 1)

    def test_leaf_probabilities(self, two_period_tree):
        tree = two_period_tree
        assert tree.leaf_probability(NodeRef(2, 0)) == pytest.approx(0.2)
        assert tree.leaf_probability(NodeRef(2, 3)) == pytest.approx(0.42)
        total = sum(p for p, _ in tree.leaf_distribution(tree.root.ref))
        assert total == pytest.approx(1.0, abs=1e-15)

    def test_conditional_distribution(self, two_period_tree):
        dist = two_period_tree.leaf_distribution(NodeRef(1, 1))
        assert [(p, node.ref) for p, node in dist] == [(0.3, NodeRef(2, 2)), (0.7, NodeRef(2, 3))]
        assert two_period_tree.leaf_distribution(NodeRef(2, 1))[0][0] == 1.0

    def test_children_of(self, two_period_tree):
        children = two_period_tree.children_of(NodeRef(0, 0))
        assert [p for p, _ in children] == [0.4, 0.6]
        assert two_period_tree.children_of(NodeRef(2, 0)) == []

    def test_deterministic(self):
        tree = ScenarioTree.deterministic(0.5, [1.0])
        assert tree.levels == 0
        assert tree.root.is_leaf
        assert tree.leaf_distribution(tree.root.ref)[0][0] == 1.0
        assert ScenarioTree.deterministic().J == 0

    def test_lookup_errors(self, two_period_tree):
        with pytest.raises(DomainError):
            two_period_tree.node(NodeRef(1, 2))
        with pytest.raises(DomainError):
            two_period_tree.nodes_at(3)
        with pytest.raises(DomainError):
            two_period_tree.leaf_probability(NodeRef(1, 0))

    def test_round_trip(self, two_period_tree):
        data = two_period_tree.to_dict()
        assert ScenarioTree.from_dict(data).to_dict() == data
        assert data["children"][1]["p"] == [0.3, 0.7]


class TestValidation:
    @pytest.mark.parametrize("data, path", [
        ({"p": [0.5, 0.5], "children": [leaf()]}, "tree.p"),
        ({"p": [0.5, 0.4], "children": [leaf(), leaf()]}, "tree.p"),
        ({"p": [0.5, 0.5 + 1e-11], "children": [leaf(), leaf()]}, "tree.p"),
        ({"p": [1.5, -0.5], "children": [leaf(), leaf()]}, "tree.p[1]"),
        ({"p": [1.0], "children": []}, "tree.children"),
        ({"p": [1.0], "children": [leaf()], "extra": 1}, "tree"),
        ({"p": [0.5, 0.5], "children": [leaf(), {"p": [0.0, 1.0], "children": [leaf(), leaf()]}]},
         "tree.children[1].p[0]"),
        ({"p": [0.5, 0.5], "children": [leaf(), leaf(psi=(1.0, 2.0))]}, "tree.children[1].psi"),
        ({"p": [0.5, 0.5], "children": [leaf(), leaf(sigma0="high")]}, "tree.children[1].sigma0"),
        ({"p": [0.5, 0.5], "children": [leaf(), {"sigma0": 0, "psi": [True]}]}, "tree.children[1].psi[0]"),
        ([1, 2], "tree"),
    ])
    def test_rejects(self, data, path):
        with pytest.raises(ConfigError) as info:
            ScenarioTree.from_dict(data)
        assert info.value.path == path
        assert f"field '{path}'" in str(info.value)

    def test_leaves_at_one_level(self):
        data = {"p": [0.5, 0.5], "children": [leaf(), {"p": [1.0], "children": [leaf()]}]}
        with pytest.raises(ConfigError, match="final level"):
            ScenarioTree.from_dict(data)
