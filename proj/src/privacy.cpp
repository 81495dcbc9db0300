#include "lethe/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lethe {

std::vector<double> attack_features(const PredictionVector& p) {
    const int k = static_cast<int>(p.probs.size());
    int active = 0;
    for (int j = 0; j < k; ++j) active += p.active[j] ? 1 : 0;
    if (active < 2) throw std::invalid_argument("attack_features: need at least 2 active classes");

    std::vector<double> out;
    out.reserve(active + 3);
    double entropy = 0.0;
    double top1 = -1.0, top2 = -1.0;
    for (int j = 0; j < k; ++j) {
        if (!p.active[j]) continue;
        const double v = p.probs[j];
        out.push_back(v);
        if (v > 0.0) entropy -= v * std::log(v);
        if (v > top1) {  // strict: ties keep the lowest id on top
            top2 = top1;
            top1 = v;
        } else if (v > top2) {
            top2 = v;
        }
    }
    out.push_back(entropy);
    out.push_back(top1 > 0.0 ? -std::log(top1) : 0.0);
    out.push_back(top1 - top2);
    return out;
}

DenseMat features_from_probs(const DenseMat& probs, const ActiveMask& active) {
    DenseMat out;
    PredictionVector p;
    p.active = active;
    for (int i = 0; i < probs.rows; ++i) {
        const auto row = probs.row(i);
        p.probs.assign(row.begin(), row.end());
        const std::vector<double> f = attack_features(p);
        if (i == 0) out = DenseMat(probs.rows, static_cast<int>(f.size()));
        std::copy(f.begin(), f.end(), out.row(i).begin());
    }
    return out;
}

ShadowPool build_shadow_pool(const LabeledCorpus& corpus, const PipelineConfig& pipeline_cfg,
                             const TrainConfig& train_cfg, Method method, int c, int num_shadows,
                             std::uint64_t seed, double cg_tol, int cg_max_iter) {
    if (num_shadows < 2) throw std::invalid_argument("build_shadow_pool: need at least 2 shadows");
    const int n = corpus.size();
    if (n < 2) throw std::invalid_argument("build_shadow_pool: corpus too small to split");
    const int k = corpus.num_classes();

    ShadowPool pool;
    pool.num_shadows = num_shadows;
    std::vector<std::vector<double>> rows;

    for (int s = 0; s < num_shadows; ++s) {
        Rng rng(seed + static_cast<std::uint64_t>(s));
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<int> member_idx(perm.begin(), perm.begin() + n / 2);
        std::vector<int> holdout_idx(perm.begin() + n / 2, perm.end());
        std::sort(member_idx.begin(), member_idx.end());
        std::sort(holdout_idx.begin(), holdout_idx.end());

        LabeledCorpus members;
        members.label_names = corpus.label_names;
        for (int idx : member_idx) {
            members.docs.push_back(corpus.docs[idx]);
            members.labels.push_back(corpus.labels[idx]);
        }

        const Vocabulary vocab = fit_vocabulary(members.docs, pipeline_cfg);
        const CsrMatrix X_m = transform(vocab, members.docs);
        const ModelParams model = train(X_m, members.labels, k, train_cfg);
        const std::uint64_t relabel_seed = rng.next_u64();
        const Release release =
            make_release(method, model, X_m, members.labels, c, train_cfg, relabel_seed, cg_tol,
                         cg_max_iter);
        const ActiveMask active = release.active();

        std::vector<std::string> holdout_docs;
        holdout_docs.reserve(holdout_idx.size());
        for (int idx : holdout_idx) holdout_docs.push_back(corpus.docs[idx]);
        const CsrMatrix X_h = transform(vocab, holdout_docs);

        const DenseMat p_m = release.probs_full(X_m);
        const DenseMat p_h = release.probs_full(X_h);

        PredictionVector pv;
        pv.active = active;
        for (int i = 0; i < p_m.rows; ++i) {
            const auto row = p_m.row(i);
            pv.probs.assign(row.begin(), row.end());
            rows.push_back(attack_features(pv));
            pool.member.push_back(1);
            pool.shadow_id.push_back(s);
            pool.true_label.push_back(members.labels[i]);
        }
        for (int i = 0; i < p_h.rows; ++i) {
            const auto row = p_h.row(i);
            pv.probs.assign(row.begin(), row.end());
            rows.push_back(attack_features(pv));
            pool.member.push_back(0);
            pool.shadow_id.push_back(s);
            pool.true_label.push_back(corpus.labels[holdout_idx[i]]);
        }
    }

    const int dim = static_cast<int>(rows.front().size());
    pool.features = DenseMat(static_cast<int>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) != dim) {
            throw std::runtime_error("build_shadow_pool: inconsistent feature dimension");
        }
        std::copy(rows[i].begin(), rows[i].end(), pool.features.row(static_cast<int>(i)).begin());
    }
    return pool;
}

double Attacker::score(std::span<const double> features) const {
    const int f = static_cast<int>(mean.size());
    if (static_cast<int>(features.size()) != f) {
        throw std::invalid_argument("attacker: feature dimension mismatch");
    }
    const auto w0 = lr.W.row(0);
    const auto w1 = lr.W.row(1);
    double s0 = w0[f], s1 = w1[f];  // constant column
    for (int j = 0; j < f; ++j) {
        const double z = (features[j] - mean[j]) / scale[j];
        s0 += w0[j] * z;
        s1 += w1[j] * z;
    }
    return 1.0 / (1.0 + std::exp(s0 - s1));
}

std::vector<double> Attacker::score_rows(const DenseMat& features) const {
    std::vector<double> out(features.rows);
    for (int i = 0; i < features.rows; ++i) out[i] = score(features.row(i));
    return out;
}

std::vector<double> Attacker::coefficients() const {
    std::vector<double> out(lr.W.cols);
    const auto w0 = lr.W.row(0);
    const auto w1 = lr.W.row(1);
    for (int j = 0; j < lr.W.cols; ++j) out[j] = w1[j] - w0[j];
    return out;
}

Attacker train_attacker(const DenseMat& features, std::span<const std::uint8_t> member,
                        double attacker_C) {
    const int n = features.rows;
    const int f = features.cols;
    if (static_cast<int>(member.size()) != n) {
        throw std::invalid_argument("train_attacker: member bit count mismatch");
    }
    std::int64_t n1 = 0;
    for (auto b : member) n1 += b ? 1 : 0;
    const std::int64_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("train_attacker: both classes required");

    Attacker att;
    att.mean.assign(f, 0.0);
    att.scale.assign(f, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto row = features.row(i);
        for (int j = 0; j < f; ++j) att.mean[j] += row[j];
    }
    for (int j = 0; j < f; ++j) att.mean[j] /= n;
    for (int i = 0; i < n; ++i) {
        const auto row = features.row(i);
        for (int j = 0; j < f; ++j) {
            const double d = row[j] - att.mean[j];
            att.scale[j] += d * d;
        }
    }
    for (int j = 0; j < f; ++j) {
        att.scale[j] = std::sqrt(att.scale[j] / n);
        if (att.scale[j] < 1e-12) att.scale[j] = 1.0;
    }

    // Standardized features plus a constant column, stored as a dense CSR.
    CsrMatrix X;
    X.rows = n;
    X.cols = f + 1;
    X.row_ptr.resize(n + 1);
    X.col.reserve(static_cast<std::size_t>(n) * (f + 1));
    X.val.reserve(static_cast<std::size_t>(n) * (f + 1));
    std::vector<int> y(n);
    std::vector<double> weights(n);
    const double w1 = 1.0 / (2.0 * static_cast<double>(n1));
    const double w0 = 1.0 / (2.0 * static_cast<double>(n0));
    for (int i = 0; i < n; ++i) {
        X.row_ptr[i] = static_cast<std::int64_t>(X.col.size());
        const auto row = features.row(i);
        for (int j = 0; j < f; ++j) {
            X.col.push_back(j);
            X.val.push_back((row[j] - att.mean[j]) / att.scale[j]);
        }
        X.col.push_back(f);
        X.val.push_back(1.0);
        y[i] = member[i] ? 1 : 0;
        weights[i] = member[i] ? w1 : w0;
    }
    X.row_ptr[n] = static_cast<std::int64_t>(X.col.size());

    TrainConfig cfg;
    cfg.C = attacker_C;
    cfg.grad_tol = 1e-7;
    cfg.max_epochs = 1000;
    att.lr = train(X, y, 2, cfg, weights);
    return att;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const std::size_t n = scores.size();
    if (labels.size() != n) throw std::invalid_argument("roc_auc: size mismatch");
    std::size_t n1 = 0;
    for (auto b : labels) n1 += b ? 1 : 0;
    const std::size_t n0 = n - n1;
    if (n1 == 0 || n0 == 0) throw std::invalid_argument("roc_auc: both labels required");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
        for (std::size_t t = i; t < j; ++t) {
            if (labels[idx[t]]) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

MiaReport evaluate_target(const Attacker& attacker, const DenseMat& member_features,
                          std::span<const int> member_labels, const DenseMat& nonmember_features,
                          std::span<const int> nonmember_labels, int c) {
    if (member_features.rows != static_cast<int>(member_labels.size()) ||
        nonmember_features.rows != static_cast<int>(nonmember_labels.size())) {
        throw std::invalid_argument("evaluate_target: label count mismatch");
    }
    const std::vector<double> s_m = attacker.score_rows(member_features);
    const std::vector<double> s_n = attacker.score_rows(nonmember_features);

    std::vector<double> ret_scores, tgt_scores;
    std::vector<std::uint8_t> ret_bits, tgt_bits;
    for (int i = 0; i < member_features.rows; ++i) {
        if (member_labels[i] == c) {
            tgt_scores.push_back(s_m[i]);
            tgt_bits.push_back(1);
        } else {
            ret_scores.push_back(s_m[i]);
            ret_bits.push_back(1);
        }
    }
    for (int i = 0; i < nonmember_features.rows; ++i) {
        if (nonmember_labels[i] == c) {
            tgt_scores.push_back(s_n[i]);
            tgt_bits.push_back(0);
        } else {
            ret_scores.push_back(s_n[i]);
            ret_bits.push_back(0);
        }
    }

    MiaReport report;
    report.coefficients = attacker.coefficients();
    report.n_retained = static_cast<int>(ret_scores.size());
    report.n_target = static_cast<int>(tgt_scores.size());
    for (auto b : ret_bits) report.n_retained_members += b ? 1 : 0;
    for (auto b : tgt_bits) report.n_target_members += b ? 1 : 0;

    const bool ret_both = report.n_retained_members > 0 &&
                          report.n_retained_members < report.n_retained;
    const bool tgt_both = report.n_target_members > 0 && report.n_target_members < report.n_target;
    if (ret_both) {
        report.auc_retained = roc_auc(ret_scores, ret_bits);
        report.has_retained = true;
    }
    if (tgt_both) {
        report.auc_target = roc_auc(tgt_scores, tgt_bits);
        report.has_target = true;
    }
    return report;
}

namespace {

void check_grid(std::span<const double> grid, const char* name) {
    if (grid.empty()) throw std::invalid_argument(std::string("noise_sweep: empty ") + name);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) {
            throw std::invalid_argument(std::string("noise_sweep: ") + name + " not ascending");
        }
    }
}

}  // namespace

std::vector<SweepRow> noise_sweep(const LabeledCorpus& train_corpus,
                                  const LabeledCorpus& test_corpus,
                                  const PipelineConfig& pipeline_cfg,
                                  const TrainConfig& base_train_cfg, int c,
                                  std::span<const double> c_grid, std::span<const double> tau_grid,
                                  std::span<const double> sigma_grid, int num_shadows,
                                  std::uint64_t seed, double cg_tol, int cg_max_iter) {
    check_grid(c_grid, "C grid");
    check_grid(tau_grid, "tau grid");
    check_grid(sigma_grid, "sigma grid");
    const int k = train_corpus.num_classes();

    const Vocabulary vocab = fit_vocabulary(train_corpus.docs, pipeline_cfg);
    const CsrMatrix X_train = transform(vocab, train_corpus.docs);
    const CsrMatrix X_test = transform(vocab, test_corpus.docs);

    std::vector<SweepRow> rows;
    for (double c_value : c_grid) {
        TrainConfig cfg = base_train_cfg;
        cfg.C = c_value;
        const ModelParams model = train(X_train, train_corpus.labels, k, cfg);
        const Release release = make_release(Method::hessian, model, X_train, train_corpus.labels,
                                             c, cfg, 0, cg_tol, cg_max_iter);
        const ActiveMask active = release.active();

        const ShadowPool pool =
            build_shadow_pool(train_corpus, pipeline_cfg, cfg, Method::hessian, c, num_shadows,
                              seed + seed_offset::kShadowBase, cg_tol, cg_max_iter);
        const Attacker attacker = train_attacker(pool.features, pool.member);

        std::vector<double> auc_at(sigma_grid.size());
        std::vector<double> acc_at(sigma_grid.size());
        for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
            const double sigma = sigma_grid[si];
            Rng noise_rng(seed + seed_offset::kNoise);
            const DenseMat p_m = release.probs_full_noisy(X_train, sigma, noise_rng);
            const DenseMat p_n = release.probs_full_noisy(X_test, sigma, noise_rng);
            const DenseMat f_m = features_from_probs(p_m, active);
            const DenseMat f_n = features_from_probs(p_n, active);
            const MiaReport rep = evaluate_target(attacker, f_m, train_corpus.labels, f_n,
                                                  test_corpus.labels, c);
            if (!rep.has_retained) {
                throw std::runtime_error("noise_sweep: retained-group AUC unavailable");
            }
            auc_at[si] = rep.auc_retained;

            int hits = 0, eligible = 0;
            for (int i = 0; i < p_n.rows; ++i) {
                if (test_corpus.labels[i] == c) continue;
                ++eligible;
                if (argmax_active(p_n.row(i), &active) == test_corpus.labels[i]) ++hits;
            }
            acc_at[si] = eligible > 0 ? static_cast<double>(hits) / eligible : 0.0;
        }

        for (double tau : tau_grid) {
            SweepRow row;
            row.C = c_value;
            row.tau = tau;
            for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
                if (auc_at[si] <= tau) {
                    row.found = true;
                    row.sigma_star = sigma_grid[si];
                    row.auc_retained = auc_at[si];
                    row.acc_excluding = acc_at[si];
                    break;
                }
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace lethe
