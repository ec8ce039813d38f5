import numpy as np
import pytest

from chaingraph import (
    ChainGraph,
    CiQuery,
    JointTable,
    NodeAttr,
    OracleError,
    StateSpaceError,
    TermTable,
    all_singleton_queries,
    build_joint,
    check_equivalence,
    check_global_markov,
    ci_deviation,
    conditional_deviation,
    directed,
    eliminate_deterministic,
    eliminated_assignment,
    factorize_chain,
    factorize_directed,
    factorize_undirected,
    implies_ci,
    marginal_deviation,
    numeric_ci,
    random_assignment,
    undirected,
)


def chain(n):
    names = [f"n{i}" for i in range(n)]
    return ChainGraph(names, [directed(names[i], names[i + 1]) for i in range(n - 1)])


# -- assignments -------------------------------------------------------------------


def test_conditional_tables_are_normalized(graphs):
    e = factorize_chain(graphs["fig1a"])
    pa = random_assignment(e, seed=11)
    t = pa["p(Dis|Age,Occ,Clim)"]
    assert t.vars == ("Age", "Occ", "Clim", "Dis")
    np.testing.assert_allclose(t.table.sum(axis=-1), 1.0)
    prior = pa["p(Age)"]
    np.testing.assert_allclose(prior.table.sum(), 1.0)


def test_potentials_live_in_the_positive_band(graphs):
    e = factorize_chain(graphs["boltzmann"])
    pa = random_assignment(e, seed=3)
    f1 = pa["f_1(x1,h1,o,wC1)"]
    assert f1.table.shape == (2, 2, 2, 2)
    assert (f1.table >= 0.1).all() and (f1.table < 1.0).all()


def test_delta_tables_are_one_hot():
    g = ChainGraph(
        {"x": NodeAttr(), "d": NodeAttr(deterministic=True, domain_size=3)},
        [directed("x", "d")],
    )
    e = factorize_directed(g)
    pa = random_assignment(e, seed=0)
    t = pa["delta(d|x)"]
    assert t.table.shape == (2, 3)
    assert ((t.table == 0.0) | (t.table == 1.0)).all()
    np.testing.assert_allclose(t.table.sum(axis=-1), 1.0)


def test_normalizers_are_computed_not_random(graphs):
    g = ChainGraph("ab", [undirected("a", "b")])
    e = factorize_undirected(g)
    pa = random_assignment(e, seed=5)
    f = pa["f_0(a,b)"].table
    z = pa["Z^-1"].table
    np.testing.assert_allclose(z, 1.0 / f.sum())


def test_block_normalizer_inverts_the_parent_sum(graphs):
    e = factorize_chain(graphs["fig2"])
    pa = random_assignment(e, seed=7)
    # f_0(b,c) must equal 1 / sum over e,f,g,h of the product of f_1..f_6
    z = pa["f_0(b,c)"]
    assert z.vars == ("b", "c")
    total = np.zeros((2, 2))
    for b in range(2):
        for c in range(2):
            s = 0.0
            for ev in range(2):
                for f in range(2):
                    for gg in range(2):
                        for h in range(2):
                            s += (
                                pa["f_1(b,f)"].table[b, f]
                                * pa["f_2(c,e)"].table[c, ev]
                                * pa["f_3(e,f)"].table[ev, f]
                                * pa["f_4(e,g)"].table[ev, gg]
                                * pa["f_5(f,h)"].table[f, h]
                                * pa["f_6(g,h)"].table[gg, h]
                            )
            total[b, c] = s
    np.testing.assert_allclose(z.table, 1.0 / total)


# -- joints ------------------------------------------------------------------------


def test_build_joint_normalizes(graphs):
    for name in ("fig1a", "fig2", "boltzmann", "cad"):
        e = factorize_chain(graphs[name])
        j = build_joint(e, random_assignment(e, seed=1))
        assert j.table.shape == tuple(2 for _ in j.vars)
        np.testing.assert_allclose(j.table.sum(), 1.0)
        assert (j.table >= 0).all()


def test_build_joint_respects_the_size_guard():
    e = factorize_directed(chain(21))
    with pytest.raises(StateSpaceError):
        build_joint(e, {})


def test_build_joint_checks_tables(graphs):
    e = factorize_chain(graphs["fig1a"])
    pa = random_assignment(e, seed=1)
    del pa["p(Age)"]
    with pytest.raises(OracleError, match="no table assigned"):
        build_joint(e, pa)
    pa2 = random_assignment(e, seed=1)
    bad = pa2["p(Age)"]
    pa2["p(Age)"] = TermTable(bad.vars, np.ones((3,)))
    with pytest.raises(OracleError, match="shape"):
        build_joint(e, pa2)
    pa3 = random_assignment(e, seed=1)
    pa3["p(Age)"] = TermTable(("Occ",), pa3["p(Age)"].table)
    with pytest.raises(OracleError, match="variables"):
        build_joint(e, pa3)


def test_joint_marginal_and_alignment():
    j = JointTable(("a", "b"), np.array([[0.1, 0.2], [0.3, 0.4]]))
    m = j.marginal(("b",))
    np.testing.assert_allclose(m.table, [0.4, 0.6])
    flipped = j.aligned(("b", "a"))
    np.testing.assert_allclose(flipped, j.table.T)


# -- deviations ----------------------------------------------------------------------


def test_ci_deviation_on_product_distribution():
    pa = np.array([0.3, 0.7])
    pb = np.array([0.6, 0.4])
    j = JointTable(("a", "b"), np.outer(pa, pb))
    q = CiQuery(frozenset("a"), frozenset("b"))
    assert ci_deviation(j, q) < 1e-15
    assert numeric_ci(j, q)

    dependent = JointTable(("a", "b"), np.array([[0.5, 0.0], [0.0, 0.5]]))
    assert ci_deviation(dependent, q) == pytest.approx(0.25)
    assert not numeric_ci(dependent, q)


def test_ci_deviation_conditional():
    # a and b independent given s, but strongly dependent marginally
    ps = np.array([0.5, 0.5])
    pa_s = np.array([[0.9, 0.1], [0.1, 0.9]])
    pb_s = np.array([[0.9, 0.1], [0.1, 0.9]])
    table = np.einsum("s,sa,sb->abs", ps, pa_s, pb_s)
    j = JointTable(("a", "b", "s"), table)
    assert ci_deviation(j, CiQuery(frozenset("a"), frozenset("b"), frozenset("s"))) < 1e-15
    assert ci_deviation(j, CiQuery(frozenset("a"), frozenset("b"))) > 0.1


def test_deviation_helpers_match_themselves(graphs):
    e = factorize_chain(graphs["fig3"])
    j = build_joint(e, random_assignment(e, seed=9))
    assert conditional_deviation(j, j, ("a",), ("b",)) == 0.0
    assert marginal_deviation(j, j, ("a", "b")) == 0.0


# -- numeric vs graph answers ---------------------------------------------------------


def test_numeric_ci_agrees_with_graph_on_fig1a(graphs):
    g = graphs["fig1a"]
    e = factorize_chain(g)
    j = build_joint(e, random_assignment(e, seed=23))
    from chaingraph import parse_ci_query

    for text in ("Symp _||_ Occ | Age,Dis", "Symp _||_ Clim | Age,Dis"):
        q = parse_ci_query(text)
        assert implies_ci(g, q) and numeric_ci(j, q)
    # non-implied dependencies should actually show up for a random draw
    q = parse_ci_query("Symp _||_ Occ | Age")
    assert not implies_ci(g, q) and not numeric_ci(j, q)


def test_all_singleton_queries_counts():
    g = chain(4)
    qs = all_singleton_queries(g)
    assert len(qs) == 6 * 4  # pairs times subsets of the remaining two
    assert len({q.text() for q in qs}) == len(qs)


def test_check_global_markov_soundness(graphs):
    rep = check_global_markov(graphs["fig3"], trials=3, seed=1)
    assert rep.ok
    assert rep.node_count == 6
    assert not rep.violations
    assert "soundness: ok" in rep.summary()


def test_check_global_markov_node_bound(graphs):
    with pytest.raises(StateSpaceError):
        check_global_markov(graphs["ffnet"])


# -- equivalence ----------------------------------------------------------------------


def test_equivalence_of_identical_models(graphs):
    e = factorize_chain(graphs["fig3"])
    rep = check_equivalence(e, e, shared={t.name(): t.name() for t in e.terms if t.kind != "normalizer"}, trials=3)
    assert rep.ok
    assert rep.max_deviation < 1e-15


def test_equivalence_negative_control(graphs):
    # without shared tables, two independently sampled models differ
    e1 = factorize_chain(graphs["fig1a"])
    e2 = factorize_chain(graphs["fig1b"])
    rep = check_equivalence(e1, e2, trials=3)
    assert not rep.ok
    assert rep.max_deviation > 1e-3
    assert "FAILED" in rep.summary()


def test_equivalence_shared_map_validation(graphs):
    e1 = factorize_chain(graphs["fig1a"])
    e2 = factorize_chain(graphs["fig1b"])
    with pytest.raises(OracleError, match="not in first"):
        check_equivalence(e1, e2, shared={"p(nope)": "p(Age)"})
    with pytest.raises(OracleError, match="not in second"):
        check_equivalence(e1, e2, shared={"p(Age)": "p(nope)"})
    with pytest.raises(OracleError, match="different signatures"):
        check_equivalence(e1, e2, shared={"p(Occ|Age)": "p(Occ)"})


def test_equivalence_modes(graphs):
    e1 = factorize_chain(graphs["fig1a"])
    e2 = factorize_chain(graphs["fig2"])
    with pytest.raises(OracleError, match="matching free/given"):
        check_equivalence(e1, e2, mode="conditional")
    with pytest.raises(OracleError, match="unknown comparison mode"):
        check_equivalence(e1, e1, mode="exact")
    rep = check_equivalence(e1, e1, shared={t.name(): t.name() for t in e1.terms}, trials=2, mode="marginal")
    assert rep.ok


# -- deterministic elimination, numerically --------------------------------------------


def test_eliminated_assignment_preserves_marginal():
    g = ChainGraph(
        {
            "x1": NodeAttr(),
            "x2": NodeAttr(),
            "d": NodeAttr(deterministic=True),
            "y": NodeAttr(),
        },
        [directed("x1", "d"), directed("x2", "d"), directed("d", "y")],
    )
    g2 = eliminate_deterministic(g)
    e = factorize_chain(g)
    pa = random_assignment(e, seed=31)
    pa2 = eliminated_assignment(g, g2, pa)
    e2 = factorize_chain(g2)
    j = build_joint(e, pa)
    j2 = build_joint(e2, pa2)
    assert marginal_deviation(j, j2, g2.node_names) < 1e-14


def test_eliminated_assignment_requires_directed(graphs):
    g = graphs["ffnet"]  # has an undirected o1 -- o2 edge
    with pytest.raises(OracleError):
        eliminated_assignment(g, g, {})
