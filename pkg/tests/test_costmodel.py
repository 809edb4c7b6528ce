import json

import pytest
from hypothesis import given, settings, strategies as st

from mechest.costmodel import (
    CategoryCost, CostProfile, default_profile, estimate, format_estimate, load_profile, save_profile,
)
from mechest.errors import NegativeCost, SchemaError
from mechest.isa import Category
from mechest.simulator import CategoryCounts

LEON3_ROWS = {
    Category.IntegerArithmetic: (45, 15),
    Category.Jump: (238, 76),
    Category.MemoryLoad: (700, 229),
    Category.MemoryStore: (376, 166),
    Category.Nop: (46, 13),
    Category.Other: (41, 13),
    Category.FpuArithmetic: (46, 14),
    Category.FpuDivide: (431, 431),
    Category.FpuSqrt: (612, 88),
}


def test_shipped_profile_rows(leon3):
    assert leon3.platform.startswith("LEON3")
    assert set(leon3.costs) == set(Category)
    for cat, (t_ns, e_nj) in LEON3_ROWS.items():
        assert leon3.time(cat) == t_ns / 1e9
        assert leon3.energy(cat) == e_nj / 1e9
        assert leon3[cat].overridden is False


def test_default_profile_equals_from_table(leon3):
    assert CostProfile.from_table(LEON3_ROWS).costs == leon3.costs


def test_zero_counts(leon3):
    est = estimate(CategoryCounts(), leon3)
    assert est.energy == 0.0 and est.time == 0.0


def test_single_integer_instruction(leon3):
    est = estimate(CategoryCounts({Category.IntegerArithmetic: 1}), leon3)
    assert est.energy == pytest.approx(15e-9, rel=1e-15)
    assert est.time == pytest.approx(45e-9, rel=1e-15)


def test_mixed_counts_hand_value(leon3):
    counts = CategoryCounts({Category.IntegerArithmetic: 1000, Category.MemoryLoad: 100,
                             Category.FpuDivide: 10})
    est = estimate(counts, leon3)
    # 1000*15 + 100*229 + 10*431 nJ; 1000*45 + 100*700 + 10*431 ns
    assert est.energy == pytest.approx(42_210e-9, rel=1e-12)
    assert est.time == pytest.approx(119_310e-9, rel=1e-12)


def test_contributions_sum_exactly(leon3):
    counts = CategoryCounts([3, 1, 4, 1, 5, 9, 2, 6, 5])
    est = estimate(counts, leon3)
    e = t = 0.0
    for cat in Category:
        e += est.contributions[cat][0]
        t += est.contributions[cat][1]
    assert (e, t) == (est.energy, est.time)
    assert est.contributions[Category.Other] == (9 * leon3.energy(Category.Other),
                                                 9 * leon3.time(Category.Other))


counts_st = st.lists(st.integers(0, 10**9), min_size=9, max_size=9).map(CategoryCounts)


@settings(max_examples=200)
@given(counts_st, counts_st)
def test_linearity(a, b):
    p = default_profile()
    ab, ea, eb = estimate(a + b, p), estimate(a, p), estimate(b, p)
    assert ab.energy == pytest.approx(ea.energy + eb.energy, rel=1e-12)
    assert ab.time == pytest.approx(ea.time + eb.time, rel=1e-12)


@settings(max_examples=200)
@given(counts_st, st.sampled_from(list(Category)), st.integers(1, 10**6))
def test_monotonicity(a, cat, extra):
    p = default_profile()
    bumped = a + CategoryCounts({cat: extra})
    assert estimate(bumped, p).energy >= estimate(a, p).energy
    assert estimate(bumped, p).time >= estimate(a, p).time


@settings(max_examples=200)
@given(counts_st, st.integers(0, 1000))
def test_scale(a, k):
    p = default_profile()
    scaled = CategoryCounts([k * n for n in a.as_list()])
    assert estimate(scaled, p).energy == pytest.approx(k * estimate(a, p).energy, rel=1e-12)
    assert estimate(scaled, p).time == pytest.approx(k * estimate(a, p).time, rel=1e-12)


def test_summation_is_reproducible(leon3):
    counts = CategoryCounts([17, 2, 99, 1, 0, 5, 123, 4, 8])
    assert len({(estimate(counts, leon3).energy, estimate(counts, leon3).time) for _ in range(5)}) == 1


def _doc(leon3):
    return json.loads(leon3.dumps())


def test_missing_category_is_schema_error(leon3, tmp_path):
    doc = _doc(leon3)
    doc["categories"] = [c for c in doc["categories"] if c["name"] != "FpuSqrt"]
    p = tmp_path / "p.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="FpuSqrt"):
        load_profile(p)


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.pop("platform"), "platform"),
    (lambda d: d["categories"][0].pop("t_ns"), "t_ns"),
    (lambda d: d["categories"][1].update(e_nJ="lots"), "e_nJ"),
    (lambda d: d["categories"][2].update(name="Bogus"), "name"),
    (lambda d: d["categories"][3].update(overridden="maybe"), "overridden"),
    (lambda d: d["categories"].append(dict(d["categories"][0])), "name"),
    (lambda d: d.update(categories={}), "categories"),
])
def test_schema_errors(leon3, tmp_path, mutate, field):
    doc = _doc(leon3)
    mutate(doc)
    p = tmp_path / "p.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(SchemaError) as exc:
        load_profile(p)
    assert field in str(exc.value)


def test_invalid_json(tmp_path):
    p = tmp_path / "p.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        load_profile(p)


def test_negative_energy_rejected(leon3, tmp_path):
    doc = _doc(leon3)
    doc["categories"][4]["e_nJ"] = -1
    p = tmp_path / "p.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(NegativeCost) as exc:
        load_profile(p)
    assert exc.value.category is Category.Nop


def test_negative_pending_entry_loads_but_does_not_estimate(leon3):
    p = leon3.with_cost(Category.Jump, energy=-1e-9, overridden="pending")
    assert p.pending == [Category.Jump]
    with pytest.raises(NegativeCost):
        estimate(CategoryCounts(), p)
    with pytest.raises(NegativeCost):
        p.with_cost(Category.Jump, energy=-1e-9, overridden=True)


def test_roundtrip_shipped(leon3, tmp_path):
    path = tmp_path / "p.json"
    save_profile(leon3, path)
    back = load_profile(path)
    assert back == leon3
    assert json.loads(path.read_text())["categories"][0]["t_ns"] == 45


costs_st = st.floats(min_value=0.0, max_value=1.0, allow_subnormal=True)


@settings(max_examples=100)
@given(st.lists(st.tuples(costs_st, costs_st), min_size=9, max_size=9),
       st.lists(st.sampled_from([False, True, "pending"]), min_size=9, max_size=9))
def test_roundtrip_arbitrary(values, flags):
    costs = {c: CategoryCost(t, e, f) for c, (t, e), f in zip(Category, values, flags)}
    p = CostProfile(costs, platform="x", hardware_config="cfg", provenance="p")
    assert CostProfile.loads(p.dumps()) == p


def test_pending_negative_roundtrip(leon3):
    p = leon3.with_cost(Category.Jump, time=-2.5e-8, overridden="pending")
    assert CostProfile.loads(p.dumps()) == p


def test_format_estimate(leon3):
    counts = CategoryCounts({Category.IntegerArithmetic: 1000})
    text = format_estimate(estimate(counts, leon3), counts)
    assert "IntegerArithmetic" in text and "15000.000" in text and "45000.000" in text
