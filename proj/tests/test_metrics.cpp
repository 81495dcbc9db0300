#include <cmath>
#include <vector>

#include "doctest.h"
#include "lethe/metrics.hpp"
#include "lethe/rng.hpp"
#include "oracles.hpp"

using namespace lethe;

namespace {

PredictionVector pv(std::vector<double> probs) {
    PredictionVector p;
    p.active.assign(probs.size(), 1);
    p.probs = std::move(probs);
    return p;
}

}  // namespace

TEST_CASE("margin on pinned probability vectors") {
    PredictionVector p = pv({0.8, 0.15, 0.05});
    CHECK(margin(p, 0) == doctest::Approx(0.65));
    CHECK(margin(p, 1) == doctest::Approx(-0.65));

    PredictionVector uniform = pv({0.25, 0.25, 0.25, 0.25});
    for (int y = 0; y < 4; ++y) CHECK(margin(uniform, y) == doctest::Approx(0.0));
}

TEST_CASE("margin is antisymmetric under swapping the top-2 reference") {
    PredictionVector p = pv({0.55, 0.35, 0.10});
    CHECK(margin(p, 0) == doctest::Approx(-margin(p, 1)));
}

TEST_CASE("margin respects the active mask") {
    PredictionVector p;
    p.probs = {0.0, 0.6, 0.4};
    p.active = {0, 1, 1};
    CHECK(margin(p, 1) == doctest::Approx(0.2));
    CHECK_THROWS(margin(p, 0));  // masked reference

    PredictionVector lone;
    lone.probs = {0.0, 1.0};
    lone.active = {0, 1};
    CHECK_THROWS(margin(lone, 1));  // no other active class
}

TEST_CASE("accuracy uses the lowest-id tie rule and the mask") {
    ModelParams m;
    m.W = DenseMat(3, 1);
    m.W.at(0, 0) = 1;
    m.W.at(1, 0) = 1;  // tie with class 0 on positive inputs
    m.W.at(2, 0) = -1;
    CsrMatrix x = oracle::csr_from_dense({{1}, {1}});
    std::vector<int> y0{0, 0};
    CHECK(accuracy(m, x, y0) == doctest::Approx(1.0));  // tie -> class 0
    std::vector<int> y1{1, 1};
    CHECK(accuracy(m, x, y1) == doctest::Approx(0.0));

    ActiveMask mask{0, 1, 1};
    CHECK(accuracy(m, x, y1, &mask) == doctest::Approx(1.0));
}

TEST_CASE("accuracy_excluding scores only retained-label examples") {
    // Released model predicting class 1 on positive inputs, class 2 on
    // negatives, class 0 removed.
    ModelParams m;
    m.W = DenseMat(3, 1);
    m.W.at(1, 0) = 2;
    m.W.at(2, 0) = -2;
    ReleasedModel released = zero_class(m, 0);

    CsrMatrix x = oracle::csr_from_dense({{1}, {-1}, {1}});
    std::vector<int> y{1, 2, 0};  // last row has the removed label: excluded
    CHECK(accuracy_excluding(released, x, y, 0) == doctest::Approx(1.0));

    std::vector<int> wrong{2, 1, 0};
    CHECK(accuracy_excluding(released, x, wrong, 0) == doctest::Approx(0.0));

    std::vector<int> all_deleted{0, 0, 0};
    CHECK_THROWS(accuracy_excluding(released, x, all_deleted, 0));
}

TEST_CASE("accuracy_excluding is invariant to monotone transforms of scores") {
    Rng rng(7);
    ModelParams m;
    m.W = oracle::random_dense(rng, 4, 6, 1.0);
    ReleasedModel released = zero_class(m, 1);

    ModelParams scaled = m;
    for (double& e : scaled.W.v) e *= 3.0;  // strictly increasing transform of scores
    ReleasedModel released_scaled = zero_class(scaled, 1);

    CsrMatrix x = oracle::random_csr(rng, 200, 6, 0.5, 1.0);
    std::vector<int> y = oracle::random_labels(rng, 200, 4);
    CHECK(accuracy_excluding(released, x, y, 1) ==
          doctest::Approx(accuracy_excluding(released_scaled, x, y, 1)));
}

TEST_CASE("accuracy_excluding for the golden model maps labels back") {
    ModelParams compact;
    compact.W = DenseMat(2, 1);
    compact.W.at(0, 0) = 2;   // compact 0 = original 0
    compact.W.at(1, 0) = -2;  // compact 1 = original 2
    GoldenModel g;
    g.params = compact;
    g.removed_class = 1;
    g.new_to_old = {0, 2};

    CsrMatrix x = oracle::csr_from_dense({{1}, {-1}, {1}});
    std::vector<int> y{0, 2, 1};  // removed-label row excluded
    CHECK(accuracy_excluding(g, x, y) == doctest::Approx(1.0));
}

TEST_CASE("agreement_on_deleted compares mapped predictions") {
    // ours: predicts class 1 everywhere (class 0 removed).
    ModelParams m;
    m.W = DenseMat(3, 1);
    m.W.at(1, 0) = 5;
    m.W.at(2, 0) = -5;
    ReleasedModel ours = zero_class(m, 0);

    // Golden with identical behavior.
    GoldenModel same;
    same.params.W = DenseMat(2, 1);
    same.params.W.at(0, 0) = 5;
    same.params.W.at(1, 0) = -5;
    same.removed_class = 0;
    same.new_to_old = {1, 2};

    CsrMatrix x_c = oracle::csr_from_dense({{1}, {2}, {3}});
    CHECK(agreement_on_deleted(ours, same, x_c) == doctest::Approx(1.0));

    // Golden constantly predicting the other retained label.
    GoldenModel opposite = same;
    opposite.params.W.at(0, 0) = -5;
    opposite.params.W.at(1, 0) = 5;
    CHECK(agreement_on_deleted(ours, opposite, x_c) == doctest::Approx(0.0));

    CsrMatrix empty;
    empty.rows = 0;
    empty.cols = 1;
    CHECK_THROWS(agreement_on_deleted(ours, same, empty));
}

TEST_CASE("ks_two_sample on identical and disjoint samples") {
    std::vector<double> a{0.1, 0.4, 0.7, 0.9};
    KsResult same = ks_two_sample(a, a);
    CHECK(same.d == doctest::Approx(0.0));
    CHECK(same.p == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(same.n_a == 4);
    CHECK(same.n_b == 4);

    std::vector<double> lo{0.0, 0.1};
    std::vector<double> hi{5.0, 5.1};
    KsResult apart = ks_two_sample(lo, hi);
    CHECK(apart.d == doctest::Approx(1.0));

    std::vector<double> empty;
    CHECK_THROWS(ks_two_sample(empty, a));
    CHECK_THROWS(ks_two_sample(a, empty));
}

TEST_CASE("ks_two_sample is symmetric") {
    Rng rng(11);
    std::vector<double> a(40);
    std::vector<double> b(60);
    for (double& e : a) e = rng.uniform_real();
    for (double& e : b) e = rng.uniform_real() * 1.3 - 0.1;
    KsResult ab = ks_two_sample(a, b);
    KsResult ba = ks_two_sample(b, a);
    CHECK(ab.d == ba.d);
    CHECK(ab.p == ba.p);
}

TEST_CASE("ks D matches the brute-force ECDF sweep exactly, ties included") {
    Rng rng(13);
    // Small cases with deliberate ties.
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(15 + rng.uniform_index(20));
        std::vector<double> b(15 + rng.uniform_index(20));
        for (double& e : a) e = std::floor(rng.uniform_real() * 8.0) / 8.0;
        for (double& e : b) e = std::floor(rng.uniform_real() * 8.0) / 8.0;
        KsResult r = ks_two_sample(a, b);
        CHECK(r.d == doctest::Approx(oracle::brute_force_ks_d(a, b)).epsilon(1e-15));
    }

    // The pinned 1000-vs-1000 uniform case.
    std::vector<double> a(1000);
    std::vector<double> b(1000);
    Rng fixed(0);
    for (double& e : a) e = fixed.uniform_real();
    for (double& e : b) e = fixed.uniform_real();
    KsResult r = ks_two_sample(a, b);
    CHECK(r.d == oracle::brute_force_ks_d(a, b));  // bit-exact
    CHECK(r.p > 0.05);
}

TEST_CASE("ks null distribution: p exceeds 0.05 for at least 95 of 100 seeds") {
    int above = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed));
        std::vector<double> a(1000);
        std::vector<double> b(1000);
        for (double& e : a) e = rng.uniform_real();
        for (double& e : b) e = rng.uniform_real();
        if (ks_two_sample(a, b).p > 0.05) ++above;
    }
    CHECK(above >= 95);
}

TEST_CASE("ks p decreases as D grows at fixed sample sizes") {
    Rng rng(17);
    std::vector<double> base(300);
    for (double& e : base) e = rng.uniform_real();
    double last_p = 1.1;
    for (double shift : {0.0, 0.05, 0.15, 0.4}) {
        std::vector<double> shifted = base;
        for (double& e : shifted) e += shift;
        KsResult r = ks_two_sample(base, shifted);
        CHECK(r.p <= last_p + 1e-12);
        last_p = r.p;
    }
}
