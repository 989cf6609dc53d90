import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import published_tables as pt
from phonostat.corpus import FrequencyVector, Mode, PhonemeInventory, build_profile, load_lexicon, \
    to_frequency_vector
from phonostat.model import DirichletModel, RankedSpectrum, expected_spectrum
from phonostat.stylometry import (
    DistanceMatrix,
    DistancePair,
    FitError,
    InsufficientTextsError,
    attribute,
    cluster_margins_beta,
    cluster_margins_common,
    cluster_margins_distance,
    distance_matrix,
    exclusive_distance_matrix,
    fit_beta,
    leave_one_out,
    margin,
    mode_comparison_report,
    r_squared,
    rho0,
    rho1,
    ss_err,
)


def simplex(n):
    return hnp.arrays(float, n, elements=st.floats(0.0, 1.0)).filter(lambda a: a.sum() > 1e-3).map(
        lambda a: a / a.sum())


def brute_margin(matrix, authorship, author, lam):
    own = [t for t, a in authorship.items() if a == author]
    foreign = [t for t, a in authorship.items() if a != author]
    inter = min(matrix.rho(i, k, lam) for i in own for k in foreign)
    intra = max([matrix.rho(i, j, lam) for i, j in itertools.combinations(own, 2)] or [0.0])
    return inter - intra


def matrix_from(ids, dist, mode=None):
    m = DistanceMatrix(tuple(ids), mode)
    for i, j in itertools.combinations(ids, 2):
        d = dist(i, j)
        m.add(DistancePair(i, j, d, d, mode))
    return m


class TestGoodnessOfFit:
    def test_examples(self):
        f, g = [0.5, 0.3, 0.2], [0.6, 0.3, 0.1]
        assert ss_err(f, f) == 0.0
        assert ss_err(f, g) == pytest.approx(0.02)
        assert r_squared(f, f) == pytest.approx(1.0)
        assert r_squared(f, g) == pytest.approx(0.9944, abs=5e-5)

    def test_constant_vector(self):
        with pytest.raises(ValueError):
            r_squared([1 / 3] * 3, [0.5, 0.3, 0.2])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ss_err([0.5, 0.5], [1.0, 0.0, 0.0])


class TestFit:
    @pytest.mark.parametrize("beta", [0.61, 0.8])
    def test_self_consistency(self, beta):
        res = fit_beta(expected_spectrum(DirichletModel(44, beta)), mode="all", text_id="model")
        assert res.beta_hat == pytest.approx(beta, abs=1e-3)
        assert res.r_squared >= 0.999999 and res.ss_err < 1e-10
        assert not res.grid_warning and abs(res.grid_beta - beta) < 0.011
        assert res.mode == "all" and res.text_id == "model"

    def test_edge_minimum_raises(self):
        with pytest.raises(FitError):
            fit_beta(expected_spectrum(DirichletModel(21, 3.0)), beta_range=(0.1, 2.0))

    def test_bad_range(self):
        with pytest.raises(ValueError):
            fit_beta(expected_spectrum(DirichletModel(5, 1.0)), beta_range=(1.0, 0.5))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_ss_err_and_r_squared_co_minimize(self, seed):
        # on slightly noisy model spectra both criteria pick the same grid cell
        rng = np.random.default_rng(seed)
        base = expected_spectrum(DirichletModel(44, 0.8)).freqs
        noisy = RankedSpectrum.from_values(base * (1 + 0.02 * rng.standard_normal(44)).clip(0.5))
        grid = np.round(np.arange(0.6, 1.0001, 0.01), 10)
        preds = [expected_spectrum(DirichletModel(44, b)) for b in grid]
        best_ss = grid[np.argmin([ss_err(noisy, p) for p in preds])]
        best_r2 = grid[np.argmin([1 - r_squared(noisy, p) for p in preds])]
        assert abs(best_ss - best_r2) <= 0.01 + 1e-12


class TestDistances:
    def test_examples(self):
        inv = PhonemeInventory(("a", "b", "c"))
        p = FrequencyVector(inv, np.array([0.5, 0.3, 0.2]))
        q = FrequencyVector(inv, np.array([0.4, 0.4, 0.2]))
        assert rho0(p, p) == 0.0
        assert rho0(p, q) == pytest.approx(0.1)
        assert rho1([0.5, 0.3, 0.2], [0.5, 0.3, 0.2]) == 0.0
        assert rho1([0.5, 0.3, 0.2], [0.4, 0.4, 0.2]) == pytest.approx(0.1)

    def test_refuses_different_inventories(self):
        p = FrequencyVector(PhonemeInventory(("a", "b")), np.array([0.5, 0.5]))
        q = FrequencyVector(PhonemeInventory(("a", "c")), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            rho0(p, q)
        with pytest.raises(ValueError):
            rho1([0.5, 0.5], [1.0, 0.0, 0.0])

    @settings(max_examples=300)
    @given(st.integers(2, 44).flatmap(lambda n: st.tuples(simplex(n), simplex(n), simplex(n))))
    def test_pseudometric(self, vecs):
        p, q, r = vecs
        for d in (rho0, lambda a, b: rho1(np.sort(a)[::-1], np.sort(b)[::-1])):
            assert d(p, q) >= 0 and d(p, p) == 0
            assert d(p, q) == d(q, p)
            assert d(p, r) <= d(p, q) + d(q, r) + 1e-12
        assert rho1(np.sort(p)[::-1], np.sort(q)[::-1]) <= rho0(p, q) + 1e-12

    @pytest.mark.parametrize("n", range(2, 13))
    def test_subset_maximization_identity(self, n):
        rng = np.random.default_rng(n)
        for _ in range(5):
            p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.full(n, 0.5))
            diff = p - q
            best = max(abs(diff[list(s)].sum()) for k in range(n + 1) for s in itertools.combinations(range(n), k))
            assert best == pytest.approx(rho0(p, q), abs=1e-14)

    def test_matrix_and_exclusive_matrix(self):
        lex = load_lexicon("a\tAH\nb\tB\nc\tK\nd\tD\nab\tAH B\n")
        types = {t: build_profile(t, w, lex, Mode.TYPES)
                 for t, w in {"x": ["a", "b", "c"], "y": ["b", "c", "d"], "z": ["a", "ab"]}.items()}
        excl = exclusive_distance_matrix(types, lex)
        # x and y share b, c: what remains is AH vs D
        assert excl.rho(*"xy", 0) == 1.0 and excl.rho(*"xy", 1) == 0.0
        assert excl.mode == "exclusive-types" and excl.rho("x", "x", 0) == 0.0
        plain = distance_matrix({t: to_frequency_vector(p) for t, p in types.items()}, "types")
        assert plain.rho(*"xy", 0) == pytest.approx(1 / 3)
        assert [(p.text_i, p.text_j) for p in plain] == [("x", "y"), ("x", "z"), ("y", "z")]


class TestMargins:
    def test_beta_margins_from_table(self):
        b = {m.author: m.b for m in cluster_margins_beta(pt.BETA_ALL, pt.AUTHORSHIP)}
        assert b == pytest.approx({"A": 0.02, "D": 0.02, "T": 0.0}, abs=1e-12)
        b_types = {m.author: m.b for m in cluster_margins_beta(pt.BETA_TYPES, pt.AUTHORSHIP)}
        assert b_types["A"] == pytest.approx(0.02, abs=1e-12)
        assert b_types["D"] > b["D"] and b_types["T"] > b["T"]

    def test_identical_beta_sets(self):
        betas = {"a1": 0.6, "a2": 0.7, "b1": 0.6, "b2": 0.7}
        authorship = {"a1": "A", "a2": "A", "b1": "B", "b2": "B"}
        for m in cluster_margins_beta(betas, authorship):
            assert m.b == pytest.approx(-0.1)

    @pytest.mark.parametrize("authorship", [{"a": "A", "b": "A"}, {"a": "A", "b": "B", "c": "B"}])
    def test_beta_margin_preconditions(self, authorship):
        with pytest.raises(InsufficientTextsError):
            cluster_margins_beta({t: 0.5 for t in authorship}, authorship)

    def test_z_from_published_matrix(self):
        z = {m.author: m for m in cluster_margins_distance(pt.matrix(pt.RHO_ALL, "all"), pt.AUTHORSHIP)}
        # the only negative margin sits with D once recomputed from the table
        assert z["D"].z1 == pytest.approx(-0.00207, abs=1e-12)
        assert z["T"].z1 == pytest.approx(0.01531, abs=1e-12)
        assert sum(v > 0 for m in z.values() for v in (m.z0, m.z1)) == 5

    def test_singletons(self):
        m = matrix_from("ab", lambda i, j: 0.3)
        assert {c.author: c.z0 for c in cluster_margins_distance(m, {"a": "A", "b": "B"})} == {"A": 0.3, "B": 0.3}

    def test_synthetic_min_max(self):
        authorship = {"a1": "A", "a2": "A", "b1": "B", "b2": "B"}
        m = matrix_from(authorship, lambda i, j: 0.1 if i[0] == j[0] else 0.3)
        assert [c.z0 for c in cluster_margins_distance(m, authorship)] == pytest.approx([0.2, 0.2])

    @settings(max_examples=60)
    @given(st.data())
    def test_recomputable(self, data):
        sizes = data.draw(st.lists(st.integers(1, 4), min_size=2, max_size=4))
        authorship = {f"{a}{k}": str(a) for a, size in enumerate(sizes) for k in range(size)}
        ids = list(authorship)
        values = data.draw(st.lists(st.floats(0, 1), min_size=2 * len(ids) ** 2, max_size=2 * len(ids) ** 2))
        m = DistanceMatrix(tuple(ids))
        for k, (i, j) in enumerate(itertools.combinations(ids, 2)):
            m.add(DistancePair(i, j, values[2 * k], values[2 * k + 1]))
        for c in cluster_margins_distance(m, authorship):
            assert c.z0 == brute_margin(m, authorship, c.author, 0)
            assert c.z1 == brute_margin(m, authorship, c.author, 1)

    def test_common_word_margins_from_table(self):
        margins = cluster_margins_common(pt.overlap_fractions(), pt.AUTHORSHIP)
        assert all(v > 0 for v in margins.values())
        assert margins["A"] == pytest.approx(1 - 0.36660 - (1 - 0.47554), abs=1e-12)

    def test_margin_needs_foreign_texts(self):
        with pytest.raises(InsufficientTextsError):
            margin(lambda i, j: 0.0, {"a": "A"}, "A")


class TestAttribution:
    def test_identical_to_reference(self):
        m = matrix_from(["c", "r1", "r2"], lambda i, j: 0.0 if {i, j} == {"c", "r1"} else 0.2)
        assert all(v.evidence for v in attribute("c", ["r1", "r2"], m).values())

    def test_far_candidate(self):
        m = matrix_from(["c", "r1", "r2"], lambda i, j: 0.5 if "c" in (i, j) else 0.1)
        verdicts = attribute("c", ["r1", "r2"], m)
        assert [v.label for v in verdicts.values()] == ["NO_EVIDENCE", "NO_EVIDENCE"]
        assert verdicts[0].candidate_max == 0.5 and verdicts[0].reference_max == 0.1

    def test_supplementary_gap(self):
        # intra-author spread up to 0.001155 and cross-author distances from 0.01508
        authorship = {"d1": "Darwin", "d2": "Darwin", "d3": "Darwin", "x": "Darwin", "t1": "Thackeray",
                      "t2": "Thackeray"}
        rng = np.random.default_rng(0)
        spread = {frozenset(("d1", "d2")): 0.001155}

        def dist(i, j):
            if authorship[i] != authorship[j]:
                return rng.uniform(0.01508, 0.05)
            return spread.get(frozenset((i, j)), rng.uniform(0.0, 0.001155))

        m = matrix_from(authorship, dist)
        assert attribute("x", ["d1", "d2", "d3"], m)[0].label == "EVIDENCE"
        assert attribute("x", ["t1", "t2"], m)[0].label == "NO_EVIDENCE"
        for t in ("d1", "d2", "d3", "x"):
            assert not attribute(t, ["t1", "t2"], m)[0].evidence

    def test_needs_two_references(self):
        m = matrix_from("ab", lambda i, j: 0.1)
        with pytest.raises(InsufficientTextsError):
            attribute("a", ["b"], m)

    @settings(max_examples=200)
    @given(st.lists(st.floats(0.0, 1.0), min_size=36, max_size=36, unique=True))
    def test_leave_one_out_bound(self, values):
        # with three texts per author at most one text per author can be attributed to its own author
        m = DistanceMatrix(tuple(pt.AUTHORSHIP))
        for key, v in zip(pt.PAIRS, values):
            m.add(DistancePair(key[0], key[1], v, v))
        results = leave_one_out(m, pt.AUTHORSHIP, lams=(0,))
        for author in "ADT":
            own = [r for r in results if r.true_author == author]
            assert sum(r.verdicts[author][0].evidence for r in own) <= 1

    def test_leave_one_out_on_published_tables(self):
        for table in (pt.RHO_ALL, pt.RHO_TYPES, pt.RHO_EXCLUSIVE):
            results = leave_one_out(pt.matrix(table, "x"), pt.AUTHORSHIP)
            assert sum(r.correct(0) for r in results) == 3


@pytest.fixture(scope="module")
def report():
    matrices = {"all": pt.matrix(pt.RHO_ALL, "all"), "types": pt.matrix(pt.RHO_TYPES, "types"),
                "exclusive-types": pt.matrix(pt.RHO_EXCLUSIVE, "exclusive-types")}
    return mode_comparison_report(pt.AUTHORSHIP, matrices, {"all": pt.BETA_ALL, "types": pt.BETA_TYPES},
                                  pt.overlap_fractions())


class TestModeComparison:
    def test_published_counts(self, report):
        assert report.counts() == {
            "beta_diff_gt_all": (9, 9),
            "b_diff_gt_all": (2, 3),
            "z_positive": (11, 12),
            "z_diff_gt_all": (6, 6),
            "rho_all_gt_diff": (17, 18),
            "z_excl_positive": (6, 6),
            "z_excl_gt_diff": (6, 6),
            "rho_excl_gt_diff": (18, 18),
            "common_positive": (3, 3),
        }

    def test_exceptions_enumerated(self, report):
        exc = {(r.group, r.label): r for r in report.exceptions()}
        assert set(exc) == {("b_diff_gt_all", "A"), ("z_positive", "all z1(D)"), ("rho_all_gt_diff", "rho0(7,8)")}
        assert exc[("b_diff_gt_all", "A")].status == "tie"
        assert exc[("rho_all_gt_diff", "rho0(7,8)")].margin == pytest.approx(-0.00269, abs=1e-12)

    def test_identical_inputs_tie(self):
        m = pt.matrix(pt.RHO_ALL, "all")
        report = mode_comparison_report(pt.AUTHORSHIP, {"all": m, "types": m, "exclusive-types": m},
                                        {"all": pt.BETA_ALL, "types": pt.BETA_ALL})
        cross = [r for r in report.relations if r.group != "z_positive" and r.group != "z_excl_positive"]
        assert cross and all(r.status == "tie" and r.margin == 0 for r in cross)

    def test_incomplete_modes(self):
        with pytest.raises(ValueError):
            mode_comparison_report(pt.AUTHORSHIP, {"all": pt.matrix(pt.RHO_ALL, "all")})
