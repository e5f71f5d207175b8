#include "test_util.hpp"

#include "spomdp/spectral.hpp"

using namespace spomdp;
using namespace testutil;

namespace {

Tensor3 rank_one_sum(const Vector& w, const Matrix& cols) {
    const std::size_t d = cols.rows();
    Tensor3 t(d, d, d);
    for (std::size_t c = 0; c < cols.cols(); ++c)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t k = 0; k < d; ++k) t(i, j, k) += w[c] * cols(i, c) * cols(j, c) * cols(k, c);
    return t;
}

// Smallest total l1 column distance over all column matchings.
double best_matched_max_error(const Matrix& est, const Matrix& truth) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : all_permutations(truth.cols())) {
        double worst = 0.0;
        for (std::size_t j = 0; j < truth.cols(); ++j)
            for (std::size_t r = 0; r < truth.rows(); ++r) worst = std::max(worst, std::abs(est(r, p[j]) - truth(r, j)));
        best = std::min(best, worst);
    }
    return best;
}

}  // namespace

TEST_CASE("a length-3 trajectory yields exactly one sample") {
    const Dims d{2, 4, 2, 4};
    Trajectory tr;
    tr.steps = {{1, 0, 2}, {3, 1, 0}, {2, 0, 1}};
    const ActionViewDataset ds = build_views(tr, {d, false}, 1);
    REQUIRE(ds.n() == 1);
    CHECK(ds.samples[0][0] == view1_index(d, 0, 1, 2));
    CHECK(ds.samples[0][1] == view2_index(d, 3, 0));
    CHECK(ds.samples[0][2] == 2);
    CHECK_THROWS_AS(build_views(tr, {d, false}, 0), Error);
}

TEST_CASE("view flattening arithmetic") {
    CHECK(view1_index({2, 4, 2, 4}, 1, 2, 3) == 27);
    CHECK(view2_index({2, 4, 2, 4}, 2, 3) == 11);
}

TEST_CASE("out-of-range trajectory entries are rejected") {
    Trajectory tr;
    tr.steps = {{1, 0, 2}, {9, 1, 0}, {2, 0, 1}};
    CHECK_THROWS_AS(build_views(tr, {{2, 4, 2, 4}, false}, 1), Error);
}

TEST_CASE("per-action sample counts follow the stationary action probability") {
    const PomdpModel m = paper_model();
    const auto p = MemorylessPolicy::uniform(4, 2);
    const std::size_t n = 100'000;
    const Trajectory tr = simulate(m, p, n, 31);
    const ChainAnalysis c = induced_chain(m, p);
    for (std::size_t l = 0; l < 2; ++l) {
        const double f = static_cast<double>(build_views(tr, {m.dims, false}, l).n()) / (n - 2);
        const double q = c.action_marginal[l];
        CHECK(std::abs(f - q) <= 3 * std::sqrt(q * (1 - q) / n));
    }
}

TEST_CASE("covariances of one sample are one-hot and duplicates do not change them") {
    ActionViewDataset ds;
    ds.shape = {{2, 2, 1, 1}, false};
    ds.samples = {{1, 0, 1}};
    const MomentSet a = empirical_covariances(ds);
    CHECK(a.K12(1, 0) == 1.0);
    CHECK(a.K12(0, 0) + a.K12(0, 1) + a.K12(1, 1) == 0.0);
    CHECK(a.K13(1, 1) == 1.0);
    CHECK(a.K23(0, 1) == 1.0);
    ds.samples.push_back(ds.samples[0]);
    const MomentSet b = empirical_covariances(ds);
    CHECK(b.K12 == a.K12);
    CHECK(b.P123 == a.P123);
}

TEST_CASE("symmetrized moments from exact covariances equal the exact M2 and M3") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const PomdpModel m = random_model({3, 5, 2, 2}, seed);
        const auto p = MemorylessPolicy::uniform(5, 2);
        for (std::size_t l = 0; l < 2; ++l) {
            const ExactMoments e = exact_moments(m, p, l);
            MomentSet k = moments_from_exact(e);
            symmetrize_and_moments(k, 3, 1e-9);
            CHECK(max_abs_diff(k.M2_hat, e.M2) < 1e-10);
            CHECK(max_abs_diff(k.M3_hat, e.M3) < 1e-10);
        }
    }
}

TEST_CASE("single-state exact moments give a rank-one M2") {
    const PomdpModel m = make_model({{0.3}, {0.7}}, {{{1.0}}, {{1.0}}}, {{{0.4, 0.6}, {0.9, 0.1}}});
    MomentSet k = moments_from_exact(exact_moments(m, MemorylessPolicy::uniform(2, 2), 1));
    symmetrize_and_moments(k, 1, 1e-9);
    const SvdResult s = svd(k.M2_hat);
    CHECK(s.S[0] > 0.1);
    CHECK(s.S[1] < 1e-12);
}

TEST_CASE("empirical moments converge to the exact ones") {
    // Ten seeded runs peak near 1.5e-3 on every quantity.
    const PomdpModel m = paper_model();
    const auto p = MemorylessPolicy::uniform(4, 2);
    const Trajectory tr = simulate(m, p, 2'200'000, 32);
    for (std::size_t l = 0; l < 2; ++l) {
        const ActionViewDataset ds = build_views(tr, {m.dims, false}, l);
        REQUIRE(ds.n() >= 1'000'000);
        MomentSet k = empirical_covariances(ds);
        const ExactMoments e = exact_moments(m, p, l);
        CHECK(spectral_norm(k.K13 - e.K13) <= 5e-3);
        symmetrize_and_moments(k, 2, 1e-9);
        CHECK(spectral_norm(k.M2_hat - e.M2) <= 2e-2);
        Tensor3 diff = k.M3_hat;
        for (std::size_t i = 0; i < diff.data().size(); ++i) diff.data()[i] -= e.M3.data()[i];
        CHECK(spectral_norm(diff) <= 5e-2);
    }
}

TEST_CASE("whitening examples") {
    const Whitening a = whiten(Matrix::identity(2), 2);
    CHECK(max_abs_diff(a.W.transpose() * a.W, Matrix::identity(2)) < 1e-14);
    const Whitening b = whiten(Matrix::from_rows({{4, 0}, {0, 1}}), 2);
    CHECK(std::abs(b.W(0, 0)) == doctest::Approx(0.5));
    CHECK(std::abs(b.W(1, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(b.W(0, 1)) + std::abs(b.W(1, 0)) < 1e-14);
}

TEST_CASE("whitening of an explicit low-rank second moment") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix mu = random_matrix(5, 3, rng);
        const Vector w = rng.dirichlet_flat(3);
        Matrix M2(5, 5);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 5; ++i)
                for (std::size_t j = 0; j < 5; ++j) M2(i, j) += w[c] * mu(i, c) * mu(j, c);
        const Whitening wh = whiten(M2, 3);
        CHECK(max_abs_diff(wh.W.transpose() * M2 * wh.W, Matrix::identity(3)) < 1e-10);
        CHECK(max_abs_diff(wh.W.transpose() * wh.W_pinvT, Matrix::identity(3)) < 1e-10);
    }
    CHECK_THROWS_AS(whiten(Matrix::from_rows({{1, 0}, {0, -1}}), 2), Error);
}

TEST_CASE("power method on already orthogonal and rank-one tensors") {
    Tensor3 t(2, 2, 2);
    t(0, 0, 0) = 2.0;
    t(1, 1, 1) = 1.0;
    const PowerResult r = tensor_power_method(t, {});
    REQUIRE(r.pairs.size() == 2);
    CHECK(r.pairs[0].value == doctest::Approx(2.0));
    CHECK(std::abs(r.pairs[0].vector[0]) == doctest::Approx(1.0));
    CHECK(r.pairs[1].value == doctest::Approx(1.0));
    CHECK(std::abs(r.pairs[1].vector[1]) == doctest::Approx(1.0));

    Rng rng(34);
    const Matrix v = random_orthonormal(3, 1, rng);
    const Tensor3 one = rank_one_sum({5.0}, v);
    PowerConfig cfg;
    cfg.seed = 1;
    const PowerResult s = tensor_power_method(
        tensor_multilinear(one, Matrix::identity(3), Matrix::identity(3), Matrix::identity(3)), cfg);
    CHECK(s.pairs[0].value == doctest::Approx(5.0));
    CHECK(std::abs(dot(s.pairs[0].vector, v.column(0))) == doctest::Approx(1.0));
}

TEST_CASE("power method reconstructs random orthogonal tensors") {
    Rng rng(35);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix v = random_orthonormal(3, 3, rng);
        const Vector lambda{3, 2, 1};
        const Tensor3 t = rank_one_sum(lambda, v);
        PowerConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(trial);
        const PowerResult r = tensor_power_method(t, cfg);
        Vector lam;
        Matrix vec(3, 3);
        for (std::size_t i = 0; i < 3; ++i) {
            lam.push_back(r.pairs[i].value);
            vec.set_column(i, r.pairs[i].vector);
        }
        Tensor3 diff = rank_one_sum(lam, vec);
        for (std::size_t i = 0; i < diff.data().size(); ++i) diff.data()[i] -= t.data()[i];
        CHECK(spectral_norm(diff) <= 1e-8);
    }
}

TEST_CASE("power method rejects non-cubic and non-finite tensors") {
    CHECK_THROWS_AS(tensor_power_method(Tensor3(2, 2, 3), {}), Error);
    Tensor3 t(2, 2, 2);
    t(0, 0, 0) = std::nan("");
    CHECK_THROWS_AS(tensor_power_method(t, {}), Error);
}

TEST_CASE("decomposition of exact moments recovers the third view") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const PomdpModel m = random_model({3, 4, 2, 2}, 100 + seed);
        const auto p = MemorylessPolicy::uniform(4, 2);
        for (std::size_t l = 0; l < 2; ++l) {
            const ExactViews v = exact_views(m, p, l);
            SpectralConfig cfg;
            cfg.power.seed = seed;
            const SpectralResult r = decompose(moments_from_exact(exact_moments(m, p, l)), 3, cfg);
            CHECK(best_matched_max_error(r.V3_hat, v.V3) < 1e-6);
            CHECK(best_matched_max_error(r.V2_hat, v.V2) < 1e-6);
            CHECK(best_matched_max_error(r.V1_hat, v.V1) < 1e-6);
        }
    }
}

TEST_CASE("single-state decomposition returns the exact view") {
    const PomdpModel m = make_model({{0.3}, {0.7}}, {{{1.0}}, {{1.0}}}, {{{0.4, 0.6}, {0.9, 0.1}}});
    const auto p = MemorylessPolicy::uniform(2, 2);
    const ExactViews v = exact_views(m, p, 0);
    const SpectralResult r = decompose(moments_from_exact(exact_moments(m, p, 0)), 1, {});
    CHECK(max_abs_diff(r.V3_hat, v.V3) < 1e-12);
    CHECK(max_abs_diff(r.V2_hat, v.V2) < 1e-12);
    CHECK(r.omega_hat[0] == doctest::Approx(1.0));
}

TEST_CASE("too few distinct samples are reported as ill conditioned") {
    ActionViewDataset ds;
    ds.shape = {{2, 2, 1, 1}, false};
    ds.samples = {{1, 0, 1}};
    CHECK_THROWS_AS(decompose(empirical_covariances(ds), 2, {}), Error);
}
