import random

import pytest

from rodtopo.errors import ClassifyError
from rodtopo.intlin import IntMatrix, determinant_divisor, is_primitive_vector
from rodtopo.roddiagram import Rod, RodDiagram, det2
from rodtopo.topology import (
    AbelianGroup,
    betti2,
    classify,
    compactify,
    end_pi1,
    fillin_path,
    fundamental_group,
    is_simply_connected,
)

from helpers import rand_primitive, rand_unimodular


def counterexample():
    return RodDiagram(
        2,
        "half_plane",
        [
            Rod.axis((1, 0)),
            Rod.horizon(),
            Rod.axis((0, 1)),
            Rod.horizon(),
            Rod.axis((1, 0)),
        ],
    )


# ----------------------------------------------------------------------
# fundamental groups


def test_pi1_counterexample_trivial():
    g = fundamental_group(counterexample())
    assert g.trivial
    assert g.display() == "0"
    assert is_simply_connected(counterexample())


def test_pi1_single_rod():
    d = RodDiagram(3, "half_plane", [Rod.axis((1, 0, 0))])
    g = fundamental_group(d)
    assert (g.free_rank, g.torsion) == (2, ())
    assert g.display() == "Z^2"
    assert not is_simply_connected(d)


def test_pi1_torsion():
    d = RodDiagram(2, "half_plane", [Rod.axis((1, 2)), Rod.axis((1, 0))])
    g = fundamental_group(d)
    assert (g.free_rank, g.torsion) == (0, (2,))
    assert g.display() == "Z_2"


def test_pi1_invariant_under_unimodular_and_permutation():
    rng = random.Random(20)
    for _ in range(60):
        n = rng.randint(2, 4)
        vs = [rand_primitive(rng, n) for _ in range(rng.randint(1, 5))]
        rods = []
        for v in vs:
            if rods:
                rods.append(Rod.horizon())
            rods.append(Rod.axis(v))
        try:
            d = RodDiagram(n, "half_plane", rods)
        except Exception:
            continue
        g = fundamental_group(d)
        Q = rand_unimodular(rng, n)
        perm = vs[:]
        rng.shuffle(perm)
        rods2 = []
        for v in perm:
            if rods2:
                rods2.append(Rod.horizon())
            rods2.append(Rod.axis(tuple(Q @ v)))
        try:
            d2 = RodDiagram(n, "half_plane", rods2)
        except Exception:
            continue
        assert fundamental_group(d2) == g


def test_end_pi1_counterexample():
    g = end_pi1(counterexample())
    assert (g.free_rank, g.torsion) == (1, ())
    assert g.display() == "Z"


def test_end_pi1_s3_end():
    d = RodDiagram(2, "half_plane", [Rod.axis((1, 0)), Rod.horizon(), Rod.axis((0, 1))])
    assert end_pi1(d) == AbelianGroup(0, ())


def test_end_pi1_lens_end_matches_two_rod_subdiagram():
    d = RodDiagram(
        3,
        "half_plane",
        [Rod.axis((1, 0, 0)), Rod.horizon(), Rod.axis((11, 9, 24))],
    )
    g = end_pi1(d)
    assert (g.free_rank, g.torsion) == (1, (3,))
    # oracle: pi_1 of the two-rod diagram with the horizon removed
    sub = RodDiagram(3, "half_plane", [Rod.axis((1, 0, 0)), Rod.axis((11, 9, 24))])
    assert fundamental_group(sub) == g


def test_end_pi1_random_matches_two_rod_subdiagram():
    rng = random.Random(21)
    for _ in range(80):
        n = rng.randint(2, 5)
        v, w = rand_primitive(rng, n), rand_primitive(rng, n)
        d = RodDiagram(n, "half_plane", [Rod.axis(v), Rod.horizon(), Rod.axis(w)])
        rods = [Rod.axis(v)] if v == w else [Rod.axis(v), Rod.horizon(), Rod.axis(w)]
        sub = RodDiagram(n, "half_plane", rods)
        assert end_pi1(d) == fundamental_group(sub)


# ----------------------------------------------------------------------
# fill-in paths


def test_fillin_already_admissible():
    assert fillin_path((1, 0), (0, 1)) == [(1, 0), (0, 1)]


def test_fillin_continued_fraction_chain():
    chain = fillin_path((1, 0), (2, 5))
    assert chain == [(1, 0), (0, 1), (1, 2), (2, 5)]
    for a, b in zip(chain, chain[1:]):
        assert det2(a, b) == 1


def test_fillin_parallel():
    chain = fillin_path((1, 0, 0), (1, 0, 0))
    assert len(chain) == 3
    assert det2(chain[0], chain[1]) == 1
    assert det2(chain[1], chain[2]) == 1


def test_fillin_random_chains():
    rng = random.Random(22)
    for _ in range(300):
        n = rng.randint(2, 6)
        v, w = rand_primitive(rng, n), rand_primitive(rng, n)
        chain = fillin_path(v, w)
        assert chain[0] == v and chain[-1] == w
        for u in chain:
            assert is_primitive_vector(u)
        for a, b in zip(chain, chain[1:]):
            assert det2(a, b) == 1


# ----------------------------------------------------------------------
# compactification


def test_compactify_counterexample_gives_s4_diagram():
    plan = compactify(counterexample())
    structures = [s.v for s in plan.diagram.structures()]
    assert structures == [(1, 0), (0, 1)]
    assert plan.diagram.shape == "disk"
    assert len(plan.diagram.corners()) == 2
    kinds = [f.kind for f in plan.horizon_fills]
    assert kinds == ["corner", "corner"]
    assert plan.end_cap.kind == "merge"
    assert is_simply_connected(plan.diagram)


def test_compactify_corner_case():
    d = RodDiagram(
        3,
        "half_plane",
        [Rod.axis((1, 0, 0)), Rod.horizon(), Rod.axis((0, 1, 0)), Rod.axis((0, 0, 1))],
    )
    plan = compactify(d)
    assert plan.horizon_fills[0].kind == "corner"
    assert is_simply_connected(plan.diagram)


def test_compactify_chain_case():
    d = RodDiagram(
        2,
        "half_plane",
        [Rod.axis((1, 0)), Rod.horizon(), Rod.axis((2, 5))],
    )
    plan = compactify(d)
    assert plan.horizon_fills[0].kind == "chain"
    assert plan.horizon_fills[0].inserted == ((0, 1), (1, 2))
    assert is_simply_connected(plan.diagram)


def test_compactify_augments_to_simple_connectivity():
    # single rod spanning the whole axis: the end cap must be rerouted
    d = RodDiagram(2, "half_plane", [Rod.axis((1, 0))])
    plan = compactify(d)
    assert plan.waypoints == ((0, 1),)
    assert is_simply_connected(plan.diagram)


def test_compactify_augmentation_keeps_end_chain_directions():
    # the end gap has Det_2 = 2, so its fill-in chain contributes a plane
    # direction the other rods miss; the simple-connectivity reroute must
    # not lose that direction when it replaces the chain
    d = RodDiagram(
        4,
        "half_plane",
        [
            Rod.axis((1, 0, 0, 0)),
            Rod.horizon(),
            Rod.axis((0, 1, 0, 0)),
            Rod.horizon(),
            Rod.axis((1, 2, 2, 0)),
        ],
    )
    plan = compactify(d)
    assert is_simply_connected(plan.diagram)
    assert len(plan.waypoints) >= 2  # both missing directions rerouted


def test_compactify_preserves_input_rods_as_cyclic_subsequence():
    rng = random.Random(23)
    for _ in range(100):
        d = _random_admissible_half_plane(rng)
        plan = compactify(d)
        assert is_simply_connected(plan.diagram)
        inputs = [s.v for s in d.structures()]
        out = [s.v for s in plan.diagram.structures()]
        walk = out * (len(inputs) + 1)
        pos = 0
        for v in inputs:
            while pos < len(walk) and walk[pos] != v:
                pos += 1
            assert pos < len(walk)
            pos += 1


def _random_admissible_half_plane(rng, nmax=4):
    from helpers import rand_admissible_next

    n = rng.randint(2, nmax)
    rods = [Rod.axis(rand_primitive(rng, n))]
    for _ in range(rng.randint(0, 5)):
        prev_axis = rods[-1].is_axis
        if prev_axis and rng.random() < 0.5:
            rods.append(Rod.horizon())
        elif prev_axis:
            rods.append(Rod.axis(rand_admissible_next(rng, rods[-1].structure.v)))
        else:
            last_axis = next(r for r in reversed(rods) if r.is_axis)
            if rng.random() < 0.3:
                rods.append(Rod.axis(last_axis.structure.v))
            else:
                rods.append(Rod.axis(rand_primitive(rng, n)))
    if not rods[-1].is_axis:
        rods.append(Rod.axis(rand_primitive(rng, n)))
    return RodDiagram(n, "half_plane", rods)


# ----------------------------------------------------------------------
# betti numbers and the chart


def s4_diagram():
    return RodDiagram(2, "disk", [Rod.axis((1, 0)), Rod.axis((0, 1))])


def s2xs2_diagram():
    return RodDiagram(
        2,
        "disk",
        [Rod.axis((1, 0)), Rod.axis((0, 1)), Rod.axis((1, 0)), Rod.axis((0, 1))],
    )


def s5_diagram():
    return RodDiagram(
        3, "disk", [Rod.axis((1, 0, 0)), Rod.axis((0, 1, 0)), Rod.axis((0, 0, 1))]
    )


def test_betti2_sphere_rows():
    assert betti2(s4_diagram()) == 0
    assert betti2(s5_diagram()) == 0


def test_betti2_s2xs2():
    # 4 corners, n = 2: the standard product diagram, chart row #1(S^2 x S^2)
    d = s2xs2_diagram()
    assert betti2(d) == 2
    c = classify(d, spin=True)
    assert c.summands == (("S^2 x S^2", 1),)


def test_betti2_requires_simply_connected():
    d = RodDiagram(2, "disk", [Rod.axis((1, 0)), Rod.axis((1, 2))])
    with pytest.raises(ClassifyError):
        betti2(d)


def test_classify_chart_rows():
    c = classify(s4_diagram(), spin=True)
    assert (c.row, c.k, c.display) == ("two_connected", 0, "S^4")

    # n = 3, spin, k = 2
    d = RodDiagram(
        3,
        "disk",
        [
            Rod.axis((1, 0, 0)),
            Rod.axis((0, 1, 0)),
            Rod.axis((0, 0, 1)),
            Rod.axis((1, 0, 0)),
            Rod.axis((0, 1, 0)),
        ],
    )
    c = classify(d, spin=True)
    assert c.k == 2
    assert c.summands == (("S^2 x S^3", 2),)
    assert c.display == "#2(S^2 x S^3)"

    c = classify(d, spin=False)
    assert c.summands == (("S^2 ~x S^3", 1), ("S^2 x S^3", 1))


def test_classify_n4_nonspin_k1():
    d = RodDiagram(
        4,
        "disk",
        [
            Rod.axis((1, 0, 0, 0)),
            Rod.axis((0, 1, 0, 0)),
            Rod.axis((0, 0, 1, 0)),
            Rod.axis((0, 0, 0, 1)),
            Rod.axis((0, 1, 1, 0)),
        ],
    )
    c = classify(d, spin=False)
    assert c.k == 1
    assert c.summands == (("S^2 ~x S^4", 1), ("S^2 x S^4", 0), ("S^3 x S^3", 2))
    assert c.display == "(S^2 ~x S^4) # 2(S^3 x S^3)"


def test_classify_spin_n2_odd_k_rejected():
    d = RodDiagram(
        2,
        "disk",
        [Rod.axis((1, 0)), Rod.axis((0, 1)), Rod.axis((1, 0)), Rod.axis((0, 1)), Rod.axis((1, 1))],
    )
    assert betti2(d) == 3
    with pytest.raises(ClassifyError):
        classify(d, spin=True)
    c = classify(d, spin=False)
    assert c.row == "non_spin"


def test_classify_rejects_unsupported_rank():
    d = RodDiagram(
        5,
        "disk",
        [
            Rod.axis((1, 0, 0, 0, 0)),
            Rod.axis((0, 1, 0, 0, 0)),
            Rod.axis((0, 0, 1, 0, 0)),
            Rod.axis((0, 0, 0, 1, 0)),
            Rod.axis((0, 0, 0, 0, 1)),
        ],
    )
    with pytest.raises(ClassifyError):
        classify(d, spin=True)


def test_counterexample_full_pipeline():
    d = counterexample()
    plan = compactify(d)
    c = classify(plan.diagram, spin=True)
    assert (c.row, c.k, c.display) == ("two_connected", 0, "S^4")


def test_refined_conjecture_property():
    # every admissible diagram compactifies to a chart entry
    rng = random.Random(24)
    for _ in range(100):
        d = _random_admissible_half_plane(rng, nmax=4)
        plan = compactify(d)
        c = classify(plan.diagram, spin=(betti2(plan.diagram) % 2 == 0 or d.n != 2))
        assert c.row in ("two_connected", "spin", "non_spin")
