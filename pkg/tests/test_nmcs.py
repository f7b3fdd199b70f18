import itertools
from collections import Counter

import numpy as np
import pytest
from graphs import T, build_indexes, build_store
from hypothesis import given, settings
from hypothesis import strategies as st

from editbench.index import StructuralIndex
from editbench.kg import Value, ValueKind
from editbench.nmcs import (
    Chain,
    ChainSet,
    Direction,
    DirectedHop,
    LiteralNode,
    NMCSConfig,
    NoSeedError,
    canonical_surfaces,
    nmcs_sample,
    node_label,
    sample_edit_triple,
    sample_locality_seed,
    select_surface_forms,
    tail_node,
)

CFG = NMCSConfig()


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def tvd(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys)


# ------------------------------------------------------------------ fixtures

def qty(x, unit=None):
    return Value(ValueKind.QUANTITY, (str(x), unit))


ONE = [T("Q1", "P1", "Q2")]

# A -> B -> C -> D -> E with mixed directions and a literal at the end
PATH = [T("Q1", "P1", "Q2"), T("Q3", "P2", "Q2"), T("Q3", "P3", "Q4"), T("Q5", "P1", "Q4"),
        T("Q5", "P4", qty(7))]

# hub Q2 with one-to-many P2 edges
FANOUT = [T("Q1", "P1", "Q2"), T("Q2", "P2", "Q3"), T("Q2", "P2", "Q4"), T("Q2", "P2", "Q5"),
          T("Q2", "P2", "Q6"), T("Q3", "P4", "Q7"), T("Q4", "P4", "Q8"), T("Q7", "P5", "red")]

# triangles and a square: most expansion candidates close a cycle
CYCLE = [T("Q1", "P1", "Q2"), T("Q2", "P1", "Q3"), T("Q3", "P1", "Q1"), T("Q3", "P2", "Q4"),
         T("Q4", "P2", "Q5"), T("Q5", "P2", "Q6"), T("Q6", "P2", "Q3"), T("Q1", "P3", "Q5"),
         T("Q2", "P3", "Q6")]

# twelve nodes: shared tails (fanin 2), duplicate literals and a many-valued relation
MIXED = [T("Q1", "P1", "Q2"), T("Q3", "P1", "Q2"), T("Q2", "P2", "Q4"), T("Q4", "P3", "Q5"),
         T("Q5", "P3", "Q6"), T("Q6", "P4", "Q7"), T("Q7", "P5", "Q8"), T("Q7", "P5", "Q9"),
         T("Q9", "P6", "1905"), T("Q8", "P6", "1905"), T("Q4", "P7", "Q10"), T("Q10", "P2", "Q11"),
         T("Q11", "P1", "Q12"), T("Q12", "P8", qty(3, "Q1"))]

GRAPHS = {"one": ONE, "path": PATH, "fanout": FANOUT, "cycle": CYCLE, "mixed": MIXED}


# ------------------------------------------------------------------ oracle

def node_of_tail(t):
    return t.tail.payload[0] if t.tail.is_item else ("lit", t)


def ends(t):
    return (t.head, node_of_tail(t))


def oracle_fanout(triples, h, r):
    return sum(1 for t in triples if t.head == h and t.relation == r)


def oracle_fanin(triples, r, o):
    return sum(1 for t in triples if t.relation == r and t.tail == o)


def simple_paths(triples, t0, exclude, h):
    """Every set of triples forming a simple path through ``t0`` with at most ``h`` triples."""
    usable = [t for t in triples if t not in exclude]
    out = set()

    def walk(path, nodes, left, right):
        out.add(tuple(path))
        if len(path) == h:
            return
        for end, side in ((left, 0), (right, 1)):
            if isinstance(end, tuple):  # literal: dead end
                continue
            for t in usable:
                if t in path or end not in ends(t):
                    continue
                other = ends(t)[1] if ends(t)[0] == end else ends(t)[0]
                if other in nodes or other == end:
                    continue
                new = [t] + path if side == 0 else path + [t]
                walk(new, nodes | {other}, other if side == 0 else left, other if side == 1 else right)

    a, b = ends(t0)
    walk([t0], {a, b}, a, b)
    return out


def chain_out(path, target, first, triples):
    """Walk away from ``target`` through ``first``; stop at path ends or before multi-valued hops."""
    a, b = ends(first)
    start = b if a == target else a
    if isinstance(start, tuple):
        return None
    chain, current, last = [first], start, first
    while True:
        nxt = [t for t in path if t != last and current in ends(t)]
        if not nxt:
            break
        (t,) = nxt
        if t.head == current:
            # toward the target this reads tail -> head
            if not t.tail.is_item or oracle_fanin(triples, t.relation, t.tail) != 1:
                break
            current = node_of_tail(t)
        else:
            if oracle_fanout(triples, t.head, t.relation) != 1:
                break
            current = t.head
        chain.append(t)
        last = t
    return chain


def hop_key(t, src):
    return (repr(t), "F" if t.head == src else "B")


def chain_key(triples_outward, target):
    nodes = [target]
    for t in triples_outward:
        a, b = ends(t)
        nodes.append(b if a == nodes[-1] else a)
    hops = tuple(hop_key(triples_outward[i], nodes[i + 1]) for i in range(len(triples_outward) - 1, -1, -1))
    return hops


def valid_structures(triples, t0, exclude, h):
    valid = set()
    for path in simple_paths(triples, t0, exclude, h):
        nodes = {n for t in path for n in ends(t)}
        for target in nodes:
            firsts = [t for t in path if target in ends(t)]
            chains = [chain_out(path, target, f, triples) for f in firsts]
            if None in chains or not any(t0 in c for c in chains):
                continue
            valid.add(frozenset(chain_key(c, target) for c in chains))
    return valid


def structure_key(cs: ChainSet):
    return frozenset(tuple((repr(h.triple), h.direction.value) for h in c.hops) for c in cs.chains)


# ------------------------------------------------------------------ invariants

def norm(node):
    return ("lit", node.triple) if isinstance(node, LiteralNode) else node


def check_invariants(cs: ChainSet, t0, exclude, triples, h):
    assert cs.seed == t0
    assert len(cs.chains) in (1, 2)
    assert len({norm(c.target) for c in cs.chains}) == 1
    all_triples = cs.triples()
    assert len(all_triples) == len(set(all_triples)) <= h
    assert any(t0 in c for c in cs.chains)
    assert not set(all_triples) & set(exclude)
    seen = set()
    for c in cs.chains:
        nodes = [norm(n) for n in c.nodes()]
        assert len(nodes) == len(set(nodes)), "chain revisits a node"
        assert not isinstance(c.start, LiteralNode)
        seen.update(nodes[:-1])
        for prev, nxt in zip(c.hops, c.hops[1:]):
            assert norm(prev.dest) == norm(nxt.source)
        for hop in c.hops[:-1]:
            t = hop.triple
            if hop.direction is Direction.FORWARD:
                assert oracle_fanout(triples, t.head, t.relation) == 1
            else:
                assert oracle_fanin(triples, t.relation, t.tail) == 1
    # two chains only meet at the target
    if cs.is_double:
        a, b = ({norm(n) for n in c.nodes()[:-1]} for c in cs.chains)
        assert not a & b


@pytest.mark.parametrize("name", list(GRAPHS))
def test_nmcs_validity_against_enumeration(name):
    triples = GRAPHS[name]
    idx = build_indexes(triples).structural
    g = rng(list(GRAPHS).index(name))
    valid_cache = {}
    produced = 0
    for run in range(10_000):
        t0 = triples[run % len(triples)]
        exclude = ()
        if run % 3 == 2 and len(triples) > 1:
            exclude = (triples[(run + 1) % len(triples)],)
        cs = nmcs_sample(t0, exclude, CFG, idx, g)
        if cs is None:
            continue
        produced += 1
        check_invariants(cs, t0, exclude, triples, CFG.max_hops)
        key = (t0, exclude)
        if key not in valid_cache:
            valid_cache[key] = valid_structures(triples, t0, set(exclude), CFG.max_hops)
        assert structure_key(cs) in valid_cache[key]
    assert produced > 1000


def test_one_triple_graph_exact_outputs():
    idx = build_indexes(ONE).structural
    t0 = ONE[0]
    seen = Counter()
    g = rng(1)
    n = 100_000
    for _ in range(n):
        cs = nmcs_sample(t0, (), CFG, idx, g)
        (chain,) = cs.chains
        (hop,) = chain.hops
        assert hop.direction is (Direction.BACKWARD if cs.target == "Q1" else Direction.FORWARD)
        seen[cs.target] += 1
    assert tvd({k: v / n for k, v in seen.items()}, {"Q1": 0.5, "Q2": 0.5}) <= 0.03


def test_two_triple_path_outputs():
    triples = [T("Q1", "P1", "Q2"), T("Q2", "P2", "Q3")]
    idx = build_indexes(triples).structural
    cfg = NMCSConfig(max_hops=2)
    g = rng(2)
    outs = {structure_key(nmcs_sample(triples[0], (), cfg, idx, g)) for _ in range(500)}
    two_hop = frozenset({(("(Q1, P1, Q2)", "F"), ("(Q2, P2, Q3)", "F"))})
    double = frozenset({(("(Q1, P1, Q2)", "F"),), (("(Q2, P2, Q3)", "B"),)})
    backward = frozenset({(("(Q2, P2, Q3)", "B"), ("(Q1, P1, Q2)", "B"))})
    # phase one may also stop at the seed alone when every attempt re-draws it
    single = {frozenset({(("(Q1, P1, Q2)", d),)}) for d in "FB"}
    assert outs == {two_hop, double, backward} | single
    assert outs == valid_structures(triples, triples[0], set(), 2)


def test_fanout_hop_cut():
    b_c1 = T("Q2", "P2", "Q3")
    triples = [T("Q1", "P1", "Q2"), b_c1, T("Q2", "P2", "Q4"), T("Q3", "P4", "Q5")]
    idx = build_indexes(triples).structural
    assert idx.fanout("Q2", "P2") == 2
    g = rng(3)
    for t0 in (triples[0], triples[3]):
        for _ in range(2000):
            cs = nmcs_sample(t0, (), CFG, idx, g)
            if cs is None:
                continue
            for c in cs.chains:
                # read forward the one-to-many hop may only be the last hop into the target
                assert all(h.triple != b_c1 or h.direction is Direction.BACKWARD for h in c.hops[:-1])
            if t0 == triples[0]:
                assert cs.target != "Q5"


def test_exclusion_respected_for_locality_seed():
    t_edit, seed = PATH[1], PATH[2]
    idx = build_indexes(PATH).structural
    g = rng(4)
    for _ in range(2000):
        cs = nmcs_sample(seed, {t_edit}, CFG, idx, g, kind="locality")
        if cs is not None:
            assert all(t_edit not in c for c in cs.chains)
            assert cs.kind == "locality"


def test_excluded_seed_rejected():
    idx = build_indexes(ONE).structural
    with pytest.raises(ValueError):
        nmcs_sample(ONE[0], ONE, CFG, idx, rng())


def test_fixed_seed_identical_chain_set():
    idx = build_indexes(MIXED).structural
    a = [nmcs_sample(MIXED[3], (), CFG, idx, rng(9)) for _ in range(5)]
    b = [nmcs_sample(MIXED[3], (), CFG, idx, rng(9)) for _ in range(5)]
    assert a == b


def test_literal_never_starts_or_passes_through():
    idx = build_indexes(MIXED).structural
    g = rng(5)
    for _ in range(3000):
        cs = nmcs_sample(MIXED[8], (), CFG, idx, g)
        if cs is None:
            continue
        for c in cs.chains:
            assert all(isinstance(n, str) for n in c.nodes()[:-1])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 7), st.integers(1, 3), st.integers(1, 7)), min_size=1, max_size=12),
       st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_random_graphs_against_oracle(raw, seed, h):
    triples, seen = [], set()
    for a, r, b in raw:
        t = T(f"Q{a}", f"P{r}", f"Q{b}")
        if a != b and t not in seen:
            seen.add(t)
            triples.append(t)
    if not triples:
        return
    idx = build_indexes(triples).structural
    cfg = NMCSConfig(max_hops=h)
    g = rng(seed)
    t0 = triples[0]
    valid = valid_structures(triples, t0, set(), h)
    for _ in range(30):
        cs = nmcs_sample(t0, (), cfg, idx, g)
        if cs is not None:
            check_invariants(cs, t0, (), triples, h)
            assert structure_key(cs) in valid


def test_chain_json_round_trip():
    idx = build_indexes(MIXED).structural
    cs = next(c for c in (nmcs_sample(MIXED[2], (), CFG, idx, rng(i)) for i in range(50)) if c is not None)
    assert ChainSet.from_json(cs.to_json()) == cs


def test_backward_hop_needs_item_tail():
    with pytest.raises(ValueError):
        DirectedHop(T("Q1", "P1", "text"), Direction.BACKWARD)


def test_chain_from_path_reads_toward_target():
    c = Chain.from_path([T("Q2", "P2", "Q3"), T("Q1", "P1", "Q2")], "Q3")
    assert [h.direction for h in c.hops] == [Direction.FORWARD, Direction.FORWARD]
    assert c.start == "Q1" and c.target == "Q3"


@pytest.mark.parametrize("kw", [dict(max_attempts=0), dict(max_hops=0), dict(alias_label_prob=1.5)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        NMCSConfig(**kw)


# ------------------------------------------------------------------ edit triples and locality seeds

def test_edit_triple_single_claim():
    idx = build_indexes(ONE).structural
    assert sample_edit_triple(idx, "Q1", rng()) == ONE[0]


def test_edit_triple_uniform_over_claims():
    triples = [T("Q1", f"P{i}", f"Q{i + 10}") for i in range(1, 5)]
    idx = build_indexes(triples).structural
    g = rng(6)
    n = 100_000
    c = Counter(sample_edit_triple(idx, "Q1", g) for _ in range(n))
    assert tvd({k: v / n for k, v in c.items()}, {t: 0.25 for t in triples}) <= 0.02


def test_edit_triple_none_when_only_unretained_claims():
    idx = build_indexes([T("Q1", "P1", "Q2")], retained=set()).structural
    assert sample_edit_triple(idx, "Q1", rng()) is None
    assert sample_edit_triple(idx, "Q2", rng()) is None


def test_locality_seed_relation_case():
    t_edit, other = T("Q1", "P1", "Q2"), T("Q3", "P1", "Q4")
    idx = build_indexes([t_edit, other]).structural
    g = rng(7)
    assert {sample_locality_seed(t_edit, idx, g) for _ in range(200)} == {other}


def test_locality_seed_never_edit_triple():
    idx = build_indexes(MIXED).structural
    g = rng(8)
    assert all(sample_locality_seed(MIXED[0], idx, g) != MIXED[0] for _ in range(2000))


def test_locality_seed_retry_cap():
    idx = build_indexes(ONE).structural
    with pytest.raises(NoSeedError):
        sample_locality_seed(ONE[0], idx, rng(), retry_cap=16)


class _Recorder:
    def __init__(self, g):
        self.g, self.highs = g, []

    def integers(self, high, *a, **kw):
        self.highs.append(high)
        return self.g.integers(high, *a, **kw)


@pytest.mark.parametrize("tail,n_options", [(qty(5), 3), ("Q2", 4)])
def test_locality_seed_object_option_only_for_items(tail, n_options):
    triples = [T("Q1", "P1", tail), T("Q1", "P2", "Q9"), T("Q9", "P1", "Q8")]
    idx = build_indexes(triples).structural
    r = _Recorder(rng(10))
    sample_locality_seed(triples[0], idx, r)
    assert r.highs[0] == n_options


# ------------------------------------------------------------------ surface forms

def _cs(triples, target):
    return ChainSet((Chain.from_path(triples, target),), "generality", triples[-1])


def test_surface_without_aliases_uses_labels():
    store = build_store(ONE, labels={"Q1": "Paris", "Q2": "France"})
    cs = _cs(ONE, "Q2")
    sf = select_surface_forms(cs, store, rng(), p_label=0.0)
    assert (sf.subject_surface, sf.subject_is_alias, sf.answer_surface, sf.answer_is_alias) == \
        ("Paris", False, "France", False)


def test_surface_alias_flags():
    store = build_store(ONE, labels={"Q1": "Paris", "Q2": "France"},
                        aliases={"Q1": ["City of Light"], "Q2": ["French Republic"]})
    sf = select_surface_forms(_cs(ONE, "Q2"), store, rng(), p_label=0.0)
    assert sf.subject_is_alias and sf.subject_surface == "City of Light"
    assert sf.answer_is_alias and sf.answer_surface == "French Republic"
    assert canonical_surfaces(_cs(ONE, "Q2"), store).subject_surface == "Paris"


def test_surface_label_probability():
    store = build_store(ONE, aliases={"Q1": ["a", "b"]})
    g = rng(11)
    n = 20_000
    alias = sum(select_surface_forms(_cs(ONE, "Q2"), store, g, 0.5).subject_is_alias for _ in range(n))
    assert abs(alias / n - 0.5) < 0.02


def test_literal_label_uses_unit_label():
    store = build_store([T("Q1", "P1", qty("11.24", "Q9"))], extra_entities=["Q9"], labels={"Q9": "solar mass"})
    t = next(iter(StructuralIndex.build(store).triples_with_head("Q1")))
    assert node_label(store, tail_node(t)) == "11.24 solar mass"
    assert isinstance(tail_node(t), LiteralNode)


def test_enumeration_oracle_counts_small_case():
    # sanity check on the oracle itself: a 1-triple graph has exactly the two single-hop readings
    assert valid_structures(ONE, ONE[0], set(), 4) == {
        frozenset({(("(Q1, P1, Q2)", "F"),)}), frozenset({(("(Q1, P1, Q2)", "B"),)})}
    assert len(list(itertools.islice(simple_paths(PATH, PATH[0], set(), 4), 100))) == 4
