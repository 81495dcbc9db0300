#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lethe/privacy.hpp"
#include "lethe/rng.hpp"
#include "lethe/synth.hpp"
#include "oracles.hpp"

using namespace lethe;

namespace {

PredictionVector pv(std::vector<double> probs) {
    PredictionVector p;
    p.active.assign(probs.size(), 1);
    p.probs = std::move(probs);
    return p;
}

SynthConfig tiny_synth() {
    SynthConfig cfg;
    cfg.num_classes = 3;
    cfg.docs_per_class = 70;
    cfg.signature_pool = 10;
    cfg.shared_pool = 15;
    cfg.tail_pool = 30;
    cfg.signature_draws = 5;
    cfg.shared_draws = 5;
    cfg.tail_draws = 2;
    cfg.neighbor_mix = 0.2;
    return cfg;
}

Attacker constant_attacker(int num_features) {
    Attacker a;
    a.lr.W = DenseMat(2, num_features + 1);
    a.mean.assign(static_cast<std::size_t>(num_features), 0.0);
    a.scale.assign(static_cast<std::size_t>(num_features), 1.0);
    return a;
}

}  // namespace

TEST_CASE("attack_features on pinned probability vectors") {
    auto f = attack_features(pv({0.5, 0.5}));
    REQUIRE(f.size() == 5);
    CHECK(f[0] == doctest::Approx(0.5));
    CHECK(f[1] == doctest::Approx(0.5));
    CHECK(f[2] == doctest::Approx(0.6931).epsilon(1e-3));  // entropy ln 2
    CHECK(f[3] == doctest::Approx(0.6931).epsilon(1e-3));  // -log p_top
    CHECK(f[4] == doctest::Approx(0.0));                   // top-2 gap

    auto g = attack_features(pv({1.0, 0.0}));
    REQUIRE(g.size() == 5);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(0.0));
    CHECK(g[2] == doctest::Approx(0.0));  // 0 log 0 := 0
    CHECK(g[3] == doctest::Approx(0.0));
    CHECK(g[4] == doctest::Approx(1.0));

    auto u = attack_features(pv({0.25, 0.25, 0.25, 0.25}));
    REQUIRE(u.size() == 7);
    CHECK(u[4] == doctest::Approx(std::log(4.0)).epsilon(1e-4));  // 1.3863
    CHECK(u[5] == doctest::Approx(std::log(4.0)).epsilon(1e-4));
    CHECK(u[6] == doctest::Approx(0.0));
}

TEST_CASE("attack_features skips masked classes and keeps label order") {
    PredictionVector p;
    p.probs = {0.6, 0.0, 0.4};
    p.active = {1, 0, 1};
    auto f = attack_features(p);
    REQUIRE(f.size() == 5);  // 2 active + 3 statistics
    CHECK(f[0] == doctest::Approx(0.6));
    CHECK(f[1] == doctest::Approx(0.4));
    CHECK(f[3] == doctest::Approx(-std::log(0.6)));
    CHECK(f[4] == doctest::Approx(0.2));

    PredictionVector lone;
    lone.probs = {0.0, 1.0};
    lone.active = {0, 1};
    CHECK_THROWS(attack_features(lone));
}

TEST_CASE("features_from_probs applies attack_features to every row") {
    DenseMat probs_mat(2, 3);
    probs_mat.v = {0.6, 0.0, 0.4, 0.1, 0.0, 0.9};
    ActiveMask active{1, 0, 1};
    DenseMat f = features_from_probs(probs_mat, active);
    REQUIRE(f.rows == 2);
    REQUIRE(f.cols == 5);
    PredictionVector p0;
    p0.probs = {0.6, 0.0, 0.4};
    p0.active = active;
    auto ref = attack_features(p0);
    for (int j = 0; j < 5; ++j) CHECK(f.at(0, j) == doctest::Approx(ref[static_cast<std::size_t>(j)]));
}

TEST_CASE("roc_auc on pinned inputs") {
    std::vector<double> s1{0.9, 0.1};
    std::vector<std::uint8_t> l1{1, 0};
    CHECK(roc_auc(s1, l1) == doctest::Approx(1.0));

    std::vector<double> s2{0.7, 0.7, 0.7, 0.7};
    std::vector<std::uint8_t> l2{1, 0, 1, 0};
    CHECK(roc_auc(s2, l2) == doctest::Approx(0.5));

    std::vector<double> s3{0.8, 0.6, 0.4};
    std::vector<std::uint8_t> l3{1, 0, 1};
    CHECK(roc_auc(s3, l3) == doctest::Approx(0.5));

    std::vector<std::uint8_t> ones{1, 1};
    CHECK_THROWS(roc_auc(s1, ones));
}

TEST_CASE("roc_auc equals exhaustive pair counting on all small inputs") {
    // Every label pattern of length <= 5 with both classes present, crossed
    // with score patterns over a 3-value alphabet (ties included).
    const double alphabet[3] = {0.1, 0.5, 0.9};
    for (int n = 2; n <= 5; ++n) {
        for (int lbits = 1; lbits < (1 << n) - 1; ++lbits) {
            std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = (lbits >> i) & 1;
            int combos = 1;
            for (int i = 0; i < n; ++i) combos *= 3;
            for (int code = 0; code < combos; ++code) {
                std::vector<double> scores(static_cast<std::size_t>(n));
                int rem = code;
                for (int i = 0; i < n; ++i) {
                    scores[static_cast<std::size_t>(i)] = alphabet[rem % 3];
                    rem /= 3;
                }
                CHECK(roc_auc(scores, labels) ==
                      doctest::Approx(oracle::exhaustive_auc(scores, labels)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("roc_auc invariances") {
    Rng rng(19);
    std::vector<double> scores(60);
    std::vector<std::uint8_t> labels(60);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform_real();
        labels[i] = (rng.uniform_real() < 0.4) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;

    const double base = roc_auc(scores, labels);

    // Strictly increasing transform leaves AUC unchanged.
    std::vector<double> squashed = scores;
    for (double& e : squashed) e = std::tanh(3.0 * e) + 2.0;
    CHECK(roc_auc(squashed, labels) == doctest::Approx(base).epsilon(1e-12));

    // Complement identity.
    std::vector<std::uint8_t> flipped = labels;
    for (auto& b : flipped) b = b ? 0 : 1;
    CHECK(roc_auc(scores, labels) + roc_auc(scores, flipped) == doctest::Approx(1.0));
}

TEST_CASE("train_attacker separates a separable feature and stays deterministic") {
    DenseMat f(40, 1);
    std::vector<std::uint8_t> member(40);
    Rng rng(23);
    for (int i = 0; i < 40; ++i) {
        const bool m = i % 2 == 0;
        member[static_cast<std::size_t>(i)] = m ? 1 : 0;
        f.at(i, 0) = (m ? 1.0 : -1.0) + 0.1 * rng.normal();
    }
    Attacker a = train_attacker(f, member);
    auto scores = a.score_rows(f);
    CHECK(roc_auc(scores, member) == doctest::Approx(1.0));
    for (double s : scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }

    Attacker b = train_attacker(f, member);
    CHECK(a.coefficients() == b.coefficients());
}

TEST_CASE("train_attacker on permuted labels scores near chance") {
    double total = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed) + 100);
        const int n = 500;
        DenseMat f(n, 3);
        std::vector<std::uint8_t> member(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) f.at(i, j) = rng.normal();
            member[static_cast<std::size_t>(i)] = (i % 2 == 0) ? 1 : 0;  // independent of features
        }
        Attacker a = train_attacker(f, member);
        total += roc_auc(a.score_rows(f), member);
    }
    const double mean_auc = total / 20.0;
    CHECK(mean_auc == doctest::Approx(0.5).epsilon(0.1));  // 0.5 +- 0.05
    CHECK(std::fabs(mean_auc - 0.5) <= 0.05);
}

TEST_CASE("train_attacker is invariant to duplicating every row") {
    Rng rng(29);
    const int n = 60;
    DenseMat f(n, 2);
    std::vector<std::uint8_t> member(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        member[static_cast<std::size_t>(i)] = (rng.uniform_real() < 0.3) ? 1 : 0;
        f.at(i, 0) = rng.normal() + (member[static_cast<std::size_t>(i)] ? 0.8 : 0.0);
        f.at(i, 1) = rng.normal();
    }
    member[0] = 1;
    member[1] = 0;

    DenseMat doubled(2 * n, 2);
    std::vector<std::uint8_t> member2(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 2; ++j) {
            doubled.at(i, j) = f.at(i, j);
            doubled.at(n + i, j) = f.at(i, j);
        }
        member2[static_cast<std::size_t>(i)] = member[static_cast<std::size_t>(i)];
        member2[static_cast<std::size_t>(n + i)] = member[static_cast<std::size_t>(i)];
    }

    Attacker a = train_attacker(f, member);
    Attacker b = train_attacker(doubled, member2);
    auto ca = a.coefficients();
    auto cb = b.coefficients();
    REQUIRE(ca.size() == cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) CHECK(ca[i] == doctest::Approx(cb[i]).epsilon(1e-6));

    CHECK_THROWS(train_attacker(f, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1)));
}

TEST_CASE("build_shadow_pool emits balanced member bits deterministically") {
    LabeledCorpus corpus = make_synthetic_corpus(tiny_synth(), 5);
    PipelineConfig pipeline;
    TrainConfig train_cfg;
    train_cfg.grad_tol = 1e-4;

    ShadowPool pool = build_shadow_pool(corpus, pipeline, train_cfg, Method::pre, -1, 2, 77);
    CHECK(pool.num_shadows == 2);
    const int n = corpus.size();
    REQUIRE(pool.features.rows == 2 * n);
    CHECK(pool.features.cols == 3 + 3);  // K active classes + 3 statistics
    REQUIRE(pool.member.size() == static_cast<std::size_t>(2 * n));
    REQUIRE(pool.shadow_id.size() == pool.member.size());
    REQUIRE(pool.true_label.size() == pool.member.size());

    for (int s = 0; s < 2; ++s) {
        int members = 0;
        int rows = 0;
        for (std::size_t i = 0; i < pool.member.size(); ++i) {
            if (pool.shadow_id[i] != s) continue;
            ++rows;
            members += pool.member[i] ? 1 : 0;
        }
        CHECK(rows == n);
        CHECK(members == n / 2);
    }

    ShadowPool again = build_shadow_pool(corpus, pipeline, train_cfg, Method::pre, -1, 2, 77);
    CHECK(pool.features.v == again.features.v);
    CHECK(pool.member == again.member);

    ShadowPool other = build_shadow_pool(corpus, pipeline, train_cfg, Method::pre, -1, 2, 78);
    CHECK(pool.features.v != other.features.v);
}

TEST_CASE("unlearned shadows drop one probability column") {
    LabeledCorpus corpus = make_synthetic_corpus(tiny_synth(), 5);
    PipelineConfig pipeline;
    TrainConfig train_cfg;
    train_cfg.grad_tol = 1e-4;
    ShadowPool pool = build_shadow_pool(corpus, pipeline, train_cfg, Method::hessian, 0, 2, 77);
    CHECK(pool.features.cols == 2 + 3);  // (K-1) active + 3 statistics
}

TEST_CASE("evaluate_target with a constant attacker reports chance AUC") {
    const int f_dim = 5;
    Attacker a = constant_attacker(f_dim);

    Rng rng(31);
    DenseMat member_f = oracle::random_dense(rng, 30, f_dim, 1.0);
    DenseMat nonmember_f = oracle::random_dense(rng, 30, f_dim, 1.0);
    std::vector<int> member_labels;
    std::vector<int> nonmember_labels;
    for (int i = 0; i < 30; ++i) {
        member_labels.push_back(i % 3);
        nonmember_labels.push_back(i % 3);
    }

    MiaReport r = evaluate_target(a, member_f, member_labels, nonmember_f, nonmember_labels, 0);
    CHECK(r.has_retained);
    CHECK(r.has_target);
    CHECK(r.auc_retained == doctest::Approx(0.5));
    CHECK(r.auc_target == doctest::Approx(0.5));
    CHECK(r.n_retained == 40);  // labels 1 and 2 on both sides
    CHECK(r.n_target == 20);
    CHECK(r.n_retained_members == 20);
    CHECK(r.n_target_members == 10);
}

TEST_CASE("evaluate_target reports an absent AUC when a group is one-sided") {
    const int f_dim = 4;
    Attacker a = constant_attacker(f_dim);
    Rng rng(37);
    DenseMat member_f = oracle::random_dense(rng, 10, f_dim, 1.0);
    DenseMat nonmember_f = oracle::random_dense(rng, 10, f_dim, 1.0);
    std::vector<int> member_labels(10, 1);     // no label-0 members
    std::vector<int> nonmember_labels(10, 0);  // only label-0 nonmembers

    MiaReport r = evaluate_target(a, member_f, member_labels, nonmember_f, nonmember_labels, 0);
    CHECK_FALSE(r.has_target);    // target group has nonmembers only
    CHECK_FALSE(r.has_retained);  // retained group has members only
}

TEST_CASE("release noise drowns the membership signal at huge sigma") {
    // Confident-on-members model: members sit far from the boundary,
    // nonmembers near it, so confidence features leak membership at
    // sigma = 0 and stop leaking under overwhelming logit noise.
    Rng rng(41);
    ModelParams m;
    m.W = DenseMat(3, 2);
    m.W.at(0, 0) = 3.0;
    m.W.at(1, 1) = 3.0;
    m.W.at(2, 0) = -2.0;
    m.W.at(2, 1) = -2.0;
    ReleasedModel released = zero_class(m, 2);
    ActiveMask active = released.mask();

    const int n = 800;
    std::vector<std::vector<double>> member_rows;
    std::vector<std::vector<double>> nonmember_rows;
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        std::vector<double> strong(2, 0.0);
        strong[static_cast<std::size_t>(cls)] = 2.0 + 0.2 * rng.normal();
        member_rows.push_back(strong);
        std::vector<double> weak(2, 0.0);
        weak[static_cast<std::size_t>(cls)] = 0.3 + 0.1 * rng.normal();
        weak[static_cast<std::size_t>(1 - cls)] = 0.2;
        nonmember_rows.push_back(weak);
    }
    CsrMatrix member_x = oracle::csr_from_dense(member_rows, 2);
    CsrMatrix nonmember_x = oracle::csr_from_dense(nonmember_rows, 2);

    auto auc_at_sigma = [&](double sigma) {
        Rng noise(98765);
        DenseMat pm = released_probs_noisy(released, member_x, sigma, noise);
        DenseMat pn = released_probs_noisy(released, nonmember_x, sigma, noise);
        DenseMat fm = features_from_probs(pm, active);
        DenseMat fn = features_from_probs(pn, active);

        DenseMat all(fm.rows + fn.rows, fm.cols);
        std::vector<std::uint8_t> member(static_cast<std::size_t>(all.rows));
        for (int i = 0; i < fm.rows; ++i) {
            std::copy(fm.row(i).begin(), fm.row(i).end(), all.row(i).begin());
            member[static_cast<std::size_t>(i)] = 1;
        }
        for (int i = 0; i < fn.rows; ++i)
            std::copy(fn.row(i).begin(), fn.row(i).end(), all.row(fm.rows + i).begin());

        Attacker a = train_attacker(all, member);
        return roc_auc(a.score_rows(all), member);
    };

    CHECK(auc_at_sigma(0.0) > 0.9);
    const double drowned = auc_at_sigma(1000.0);
    CHECK(drowned >= 0.45);
    CHECK(drowned <= 0.55);
}

TEST_CASE("noise_sweep satisfies the vacuous-tau contract") {
    LabeledCorpus corpus = make_synthetic_corpus(tiny_synth(), 9);
    // Deterministic 2:1 train/test split by index.
    LabeledCorpus train_corpus;
    LabeledCorpus test_corpus;
    train_corpus.label_names = corpus.label_names;
    test_corpus.label_names = corpus.label_names;
    for (int i = 0; i < corpus.size(); ++i) {
        auto& dst = (i % 3 == 2) ? test_corpus : train_corpus;
        dst.docs.push_back(corpus.docs[static_cast<std::size_t>(i)]);
        dst.labels.push_back(corpus.labels[static_cast<std::size_t>(i)]);
    }

    PipelineConfig pipeline;
    TrainConfig train_cfg;
    train_cfg.grad_tol = 1e-4;
    std::vector<double> c_grid{10.0};
    std::vector<double> tau_grid{0.55, 1.0};
    std::vector<double> sigma_grid{0.0, 0.5, 1000.0};

    auto rows = noise_sweep(train_corpus, test_corpus, pipeline, train_cfg, 0, c_grid, tau_grid,
                            sigma_grid, 2, 3);
    REQUIRE(rows.size() == c_grid.size() * tau_grid.size());
    for (const auto& row : rows) {
        if (row.tau == 1.0) {
            CHECK(row.found);
            CHECK(row.sigma_star == 0.0);  // AUC <= 1 always holds at sigma 0
            CHECK(row.auc_retained <= 1.0);
            CHECK(row.acc_excluding > 0.0);
        }
        if (row.found) {
            CHECK(row.auc_retained <= row.tau + 1e-12);
        }
    }

    // Identical call reproduces identical rows (noise reseeded per cell).
    auto rows2 = noise_sweep(train_corpus, test_corpus, pipeline, train_cfg, 0, c_grid, tau_grid,
                             sigma_grid, 2, 3);
    REQUIRE(rows2.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].sigma_star == rows2[i].sigma_star);
        CHECK(rows[i].auc_retained == rows2[i].auc_retained);
        CHECK(rows[i].acc_excluding == rows2[i].acc_excluding);
    }
}
