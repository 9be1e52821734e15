import pytest

from diffauction import structures as st
from diffauction.errors import ParseError
from diffauction.network import parse_instance, valid_buyers


def test_chain_star_shapes():
    c = st.chain(4)
    assert c.seller_neighbors == {1}
    assert c.neighbors[2] == {1, 3}
    s = st.star(4)
    assert s.seller_neighbors == {1, 2, 3, 4}
    assert all(not s.neighbors[i] for i in s.buyers)


def test_fig1_degrees():
    f = st.fig1()
    assert f.neighbors[4] == {1, 2, 6, 7}
    assert f.neighbors[8] == {5}


def test_fig2_parameterized():
    f = st.fig2(5)
    assert f.n == 7
    assert f.neighbors[1] == {3, 4, 5, 6, 7}
    with pytest.raises(ParseError):
        st.fig2(0)


def test_alias_resolution():
    sid, s = st.resolve_structure("chain-3")
    assert sid == "n3-5" and s == st.TABLE1_N3["n3-5"]
    sid, s = st.resolve_structure("star-triangle")
    assert sid == "n3-1"
    sid, s = st.resolve_structure("chain-7")
    assert sid == "chain-7" and s.n == 7
    with pytest.raises(ParseError):
        st.resolve_structure("torus-9")


def test_optional_edges_produce_valid_structures():
    for name in list(st.TABLE1_N3) + list(st.TABLE1_N4):
        base = st.ALIASES.get(name, name)
        variant = st.with_extra_edges(st.TABLE1_N3.get(base) or st.TABLE1_N4[base],
                                      st.optional_edges(base))
        report = variant.truthful_report({i: 0.0 for i in variant.buyers})
        assert valid_buyers(report) == frozenset(variant.buyers)


def test_fixture_files_match_registry(tmp_path):
    for name, structure in {**st.TABLE1_N3, **st.TABLE1_N4}.items():
        path = f"instances/{name.replace('-', '_')}.json"
        with open(path, "r", encoding="utf-8") as handle:
            parsed, _ = parse_instance(handle.read())
        assert parsed == structure, name


def test_random_connected_structures_are_connected():
    import numpy as np
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = st.random_connected_structure(int(rng.integers(1, 20)), rng)
        report = s.truthful_report({i: 0.0 for i in s.buyers})
        assert valid_buyers(report) == frozenset(s.buyers)
