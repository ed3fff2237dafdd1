from seeding import component_rng, derive_seed


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(1, "negatives") == derive_seed(1, "negatives")
    seeds = {derive_seed(1, "negatives"), derive_seed(1, "training"), derive_seed(2, "negatives"),
             derive_seed(1, "train", 0), derive_seed(1, "train", 1)}
    assert len(seeds) == 5
    assert all(0 <= s < 2**32 for s in seeds)


def test_component_rng_replays():
    a = component_rng(7, "validation").integers(0, 1000, size=10)
    b = component_rng(7, "validation").integers(0, 1000, size=10)
    assert a.tolist() == b.tolist()
