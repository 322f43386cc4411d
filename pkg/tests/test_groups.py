import random

import pytest

from gapcert.groups import (
    CyclicModel,
    FreeModel,
    InconsistentModelError,
    MatrixModel,
    SupportBasis,
    ball,
    model_from_spec,
    validate_model,
)
from gapcert.presets import load_preset, sl3z_images
from gapcert.words import Word, parse_presentation

from _oracles import (
    brute_ball_keys,
    invert_3x3_unimodular,
    mat_identity_3x3,
    mat_mul_3x3,
    word_image_3x3,
)


def test_evaluate_identity_word():
    model = MatrixModel(sl3z_images())
    assert model.evaluate(Word.identity()).key == mat_identity_3x3()


def test_generator_image_is_elementary_matrix():
    model = MatrixModel(sl3z_images())
    e12 = model.generator(0)
    assert e12.key == ((1, 1, 0), (0, 1, 0), (0, 0, 1))


def test_sl3z_relators_evaluate_to_identity_against_naive_oracle():
    p, model = load_preset("sl3z")
    images = [tuple(tuple(r) for r in img) for img in sl3z_images()]
    inverses = [invert_3x3_unimodular(img) for img in images]
    for rel in p.relators:
        assert word_image_3x3(rel, images, inverses) == mat_identity_3x3()
        assert model.evaluate(rel).key == mat_identity_3x3()


def test_multiply_oracle_e12_e21():
    model = MatrixModel(sl3z_images())
    prod = model.multiply(model.generator(0), model.generator(2))
    assert prod.key == ((2, 1, 0), (1, 1, 0), (0, 0, 1))


def test_group_axioms_on_random_words():
    model = MatrixModel(sl3z_images())
    rng = random.Random(3)
    ident = model.identity()
    for _ in range(50):
        w = Word([(rng.randrange(6), rng.choice((1, -1))) for _ in range(rng.randrange(8))])
        g = model.evaluate(w)
        assert model.multiply(g, model.inverse(g)) == ident
        assert model.multiply(ident, g) == g
        v = Word([(rng.randrange(6), rng.choice((1, -1))) for _ in range(rng.randrange(8))])
        assert model.evaluate(w * v) == model.multiply(g, model.evaluate(v))


def test_ball_radius_zero():
    model = CyclicModel(5)
    b = ball(model, 0)
    assert [e.key for e in b] == [0]


def test_ball_z3_brute_force():
    model = CyclicModel(3)
    b = ball(model, 1)
    expected = brute_ball_keys([1], [2], 1, lambda a, g: (a + g) % 3, 0)
    assert set(e.key for e in b) == expected == {0, 1, 2}


def test_ball_sl3z_radius1_has_13_elements():
    _, model = load_preset("sl3z")
    b = ball(model, 1)
    assert len(b) == 13
    images = [tuple(tuple(r) for r in img) for img in sl3z_images()]
    inverses = [invert_3x3_unimodular(img) for img in images]
    expected = brute_ball_keys(images, inverses, 1, mat_mul_3x3, mat_identity_3x3())
    assert set(e.key for e in b) == expected


def test_ball_monotone_and_inversion_closed():
    _, model = load_preset("sl3z")
    prev = set()
    for r in range(3):
        b = ball(model, r)
        keys = set(e.key for e in b)
        assert prev <= keys
        prev = keys
        for el in b:
            assert model.inverse(el).key in keys


def test_ball_bfs_order_deterministic():
    _, model = load_preset("sl3z")
    a = [e.key for e in ball(model, 2)]
    b = [e.key for e in ball(model, 2)]
    assert a == b
    assert a[0] == mat_identity_3x3()
    # identity, then the 12 signed generators, then radius 2
    assert len(a) == 121 and len(set(a[:13])) == 13


def test_free_model_ball_and_soundness():
    model = FreeModel(2, sound=True)
    b = ball(model, 1)
    assert [e.key for e in b] == [(), (1,), (-1,), (2,), (-2,)]
    unsound = FreeModel(2, sound=False)
    with pytest.raises(ValueError):
        ball(unsound, 1)


def test_validate_model_rejects_wrong_quotient():
    p = parse_presentation("gens: t\nrel: t^3\n")
    with pytest.raises(InconsistentModelError):
        validate_model(p, CyclicModel(4))
    validate_model(p, CyclicModel(3))


def test_validate_model_free_with_relators():
    p = parse_presentation("gens: a\nrel: a^2\n")
    with pytest.raises(InconsistentModelError):
        validate_model(p, FreeModel(1, sound=True))
    validate_model(p, FreeModel(1, sound=False))


def test_modular_model_collapses_inverses_mod_2():
    _, model = load_preset("sl3z-mod:2")
    g = model.generator(0)
    assert model.inverse(g) == g
    assert len(ball(model, 1)) == 7


def test_support_basis_invariants():
    model = CyclicModel(4)
    with pytest.raises(ValueError):
        SupportBasis([])
    with pytest.raises(ValueError):
        SupportBasis([model.generator(0)])  # identity must come first
    with pytest.raises(ValueError):
        # not inversion closed: {e, t} lacks t^-1 = t^3
        SupportBasis([model.identity(), model.generator(0)])


def test_support_basis_json_round_trip():
    _, model = load_preset("sl3z")
    b = ball(model, 1)
    data = b.to_json()
    back = SupportBasis.from_json(data)
    assert [e.key for e in back] == [e.key for e in b]
    assert back.radius == b.radius
    assert back.model.spec() == model.spec()


def test_model_spec_round_trip():
    for name in ("z3", "z2-abelian", "free:2", "sl3z", "sl3z-mod:3"):
        _, model = load_preset(name)
        again = model_from_spec(model.spec())
        assert again.spec() == model.spec()
        assert again.model_id == model.model_id


def test_product_table_identities():
    model = CyclicModel(3)
    b = ball(model, 1)
    table = b.products()
    # A_{g^-1} = A_g transposed, and the patterns tile all of E x E
    m = len(b)
    patterns = [set() for _ in range(len(table))]
    for x in range(m):
        for y in range(m):
            patterns[table.pid[x][y]].add((x, y))
    total = 0
    for pid, pat in enumerate(patterns):
        total += len(pat)
        inv = table.inverse_pid[pid]
        assert {(y, x) for (x, y) in pat} == patterns[inv]
    assert total == m * m
    ident_pattern = patterns[table.identity_pid]
    assert ident_pattern == {(x, x) for x in range(m)}


def test_cyclic_model_overflow_free_large_entries():
    # matrix models use python ints; no silent wraparound anywhere
    model = MatrixModel([[[1, 1], [0, 1]]])
    g = model.generator(0)
    big = model.identity()
    for _ in range(200):
        big = model.multiply(big, g)
    assert big.key[0][1] == 200
