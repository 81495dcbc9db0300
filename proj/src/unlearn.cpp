#include "lethe/unlearn.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lethe {

namespace {

void check_class(int c, int k) {
    if (c < 0 || c >= k) {
        throw std::invalid_argument("class id " + std::to_string(c) + " out of range for " +
                                    std::to_string(k) + " classes");
    }
}

}  // namespace

DenseMat class_gradient(const ModelParams& model, const CsrMatrix& X_c, int c) {
    const int k = model.num_classes();
    check_class(c, k);
    if (X_c.cols != model.dim() && X_c.rows > 0) {
        throw std::invalid_argument("class_gradient: feature dimension mismatch");
    }
    DenseMat g(k, model.dim());
    std::vector<double> s(k), p(k);
    for (int i = 0; i < X_c.rows; ++i) {
        const auto row = X_c.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            const auto w = model.W.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < row.cols.size(); ++t) acc += row.vals[t] * w[row.cols[t]];
            s[j] = acc;
            mx = std::max(mx, acc);
        }
        double z = 0.0;
        for (int j = 0; j < k; ++j) {
            p[j] = std::exp(s[j] - mx);
            z += p[j];
        }
        for (int j = 0; j < k; ++j) {
            const double coef = p[j] / z - (j == c ? 1.0 : 0.0);
            if (coef == 0.0) continue;
            auto grow = g.row(j);
            for (std::size_t t = 0; t < row.cols.size(); ++t) grow[row.cols[t]] += coef * row.vals[t];
        }
    }
    return g;
}

std::vector<double> apply_downweight(std::span<const double> w, const LinOp& hessian_apply,
                                     std::span<const double> g, double cg_tol, int cg_max_iter,
                                     CgResult* stats) {
    CgResult res = cg_solve(hessian_apply, g, cg_tol, cg_max_iter);
    std::vector<double> out(w.begin(), w.end());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += res.x[t];
    if (stats) *stats = std::move(res);
    return out;
}

std::pair<ModelParams, UnlearnUpdate> hessian_downweight(const ModelParams& model,
                                                         const CsrMatrix& X_all,
                                                         std::span<const int> y_all, int c,
                                                         double cg_tol, int cg_max_iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const int k = model.num_classes();
    check_class(c, k);
    if (static_cast<int>(y_all.size()) != X_all.rows) {
        throw std::invalid_argument("hessian_downweight: label count mismatch");
    }

    std::vector<int> deleted_rows;
    for (int i = 0; i < X_all.rows; ++i) {
        if (y_all[i] == c) deleted_rows.push_back(i);
    }
    const CsrMatrix X_c = X_all.select_rows(deleted_rows);
    const DenseMat g_c = class_gradient(model, X_c, c);

    UnlearnUpdate upd;
    upd.class_gradient_norm = norm2(g_c.v);

    // The Hessian is applied many times at the fixed point W, so the row
    // probabilities are computed once and shared across all CG iterations.
    // The solve runs in the feature-major layout so each sparse entry touches
    // one contiguous K-block per vector; only the endpoints transpose.
    const int d = model.dim();
    const DenseMat P = probs(scores(model, X_all), nullptr);
    LinOp apply = [&X_all, &P, &model](std::span<const double> v, std::span<double> out) {
        hvp_probs_feature_major_into(P, model.lambda, X_all, v, out);
    };

    std::vector<double> w_t(static_cast<std::size_t>(k) * d);
    std::vector<double> g_t(static_cast<std::size_t>(k) * d);
    for (int j = 0; j < k; ++j) {
        for (int t = 0; t < d; ++t) {
            w_t[static_cast<std::size_t>(t) * k + j] = model.W.at(j, t);
            g_t[static_cast<std::size_t>(t) * k + j] = g_c.at(j, t);
        }
    }
    const std::vector<double> w_new_t =
        apply_downweight(w_t, apply, g_t, cg_tol, cg_max_iter, &upd.cg);

    ModelParams updated = model;
    upd.delta = DenseMat(k, d);
    for (int j = 0; j < k; ++j) {
        for (int t = 0; t < d; ++t) {
            updated.W.at(j, t) = w_new_t[static_cast<std::size_t>(t) * k + j];
            upd.delta.at(j, t) = upd.cg.x[static_cast<std::size_t>(t) * k + j];
        }
    }
    upd.cg.x = upd.delta.v;
    upd.cg_warning = !upd.cg.converged;

    const auto t1 = std::chrono::steady_clock::now();
    upd.wall_time = std::chrono::duration<double>(t1 - t0).count();
    return {std::move(updated), std::move(upd)};
}

ReleasedModel zero_class(const ModelParams& model, int c) {
    check_class(c, model.num_classes());
    ReleasedModel out;
    out.params = model;
    out.removed_class = c;
    auto row = out.params.W.row(c);
    std::fill(row.begin(), row.end(), 0.0);
    return out;
}

int next_top1(const ModelParams& pre_model, SparseRowView x, int c) {
    const int k = pre_model.num_classes();
    check_class(c, k);
    if (k < 2) throw std::invalid_argument("next_top1: no remaining label");
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
        if (j == c) continue;
        const auto w = pre_model.W.row(j);
        double acc = 0.0;
        for (std::size_t t = 0; t < x.cols.size(); ++t) acc += x.vals[t] * w[x.cols[t]];
        if (acc > best_v) {
            best_v = acc;
            best = j;
        }
    }
    return best;
}

std::vector<int> random_relabel(std::span<const int> y, int c, int num_classes,
                                std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("random_relabel: need at least 2 classes");
    check_class(c, num_classes);
    Rng rng(seed);
    std::vector<int> out(y.begin(), y.end());
    for (int& label : out) {
        if (label != c) continue;
        const int r = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(num_classes - 1)));
        label = r < c ? r : r + 1;
    }
    return out;
}

GoldenModel golden_retrain(const CsrMatrix& X_retained, std::span<const int> y_retained, int c,
                           int num_classes, const TrainConfig& config) {
    check_class(c, num_classes);
    if (num_classes < 3) throw std::invalid_argument("golden_retrain: fewer than 2 retained classes");
    GoldenModel out;
    out.removed_class = c;
    out.new_to_old.reserve(num_classes - 1);
    for (int j = 0; j < num_classes; ++j) {
        if (j != c) out.new_to_old.push_back(j);
    }
    std::vector<int> compact(y_retained.size());
    for (std::size_t i = 0; i < y_retained.size(); ++i) {
        if (y_retained[i] == c) {
            throw std::invalid_argument("golden_retrain: retained labels contain the deleted class");
        }
        compact[i] = out.to_new(y_retained[i]);
    }
    out.params = train(X_retained, compact, num_classes - 1, config);
    return out;
}

DenseMat released_probs(const ReleasedModel& model, const CsrMatrix& X) {
    const ActiveMask m = model.mask();
    return probs(scores(model.params, X), &m);
}

DenseMat released_probs_noisy(const ReleasedModel& model, const CsrMatrix& X, double sigma,
                              Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("released_probs_noisy: negative sigma");
    if (sigma == 0.0) return released_probs(model, X);
    const ActiveMask m = model.mask();
    DenseMat s = scores(model.params, X);
    for (int i = 0; i < s.rows; ++i) {
        auto row = s.row(i);
        for (int j = 0; j < s.cols; ++j) {
            if (m[j]) row[j] += sigma * rng.normal();
        }
    }
    return probs(s, &m);
}

const char* method_name(Method m) {
    switch (m) {
        case Method::pre: return "pre";
        case Method::hessian: return "hessian";
        case Method::relabel: return "random_relabel";
        case Method::golden: return "golden";
    }
    return "?";
}

bool parse_method(std::string_view name, Method* out) {
    if (name == "pre") *out = Method::pre;
    else if (name == "hessian") *out = Method::hessian;
    else if (name == "random_relabel") *out = Method::relabel;
    else if (name == "golden") *out = Method::golden;
    else return false;
    return true;
}

ActiveMask Release::active() const {
    ActiveMask m(num_classes, 1);
    if (removed_class >= 0) m[removed_class] = 0;
    return m;
}

namespace {

// Scatters compact-head probabilities back into original label columns.
DenseMat expand_probs(const DenseMat& compact, std::span<const int> row_to_label, int k) {
    DenseMat full(compact.rows, k);
    for (int i = 0; i < compact.rows; ++i) {
        const auto src = compact.row(i);
        auto dst = full.row(i);
        for (int j = 0; j < compact.cols; ++j) dst[row_to_label[j]] = src[j];
    }
    return full;
}

}  // namespace

DenseMat Release::probs_full(const CsrMatrix& X) const {
    if (static_cast<int>(row_to_label.size()) == num_classes) {
        const ActiveMask m = active();
        return probs(scores(params, X), removed_class >= 0 ? &m : nullptr);
    }
    return expand_probs(probs(scores(params, X), nullptr), row_to_label, num_classes);
}

DenseMat Release::probs_full_noisy(const CsrMatrix& X, double sigma, Rng& rng) const {
    if (sigma < 0.0) throw std::invalid_argument("probs_full_noisy: negative sigma");
    if (sigma == 0.0) return probs_full(X);
    DenseMat s = scores(params, X);
    const bool full_head = static_cast<int>(row_to_label.size()) == num_classes;
    for (int i = 0; i < s.rows; ++i) {
        auto row = s.row(i);
        for (int j = 0; j < s.cols; ++j) {
            if (full_head && j == removed_class) continue;
            row[j] += sigma * rng.normal();
        }
    }
    if (full_head) {
        const ActiveMask m = active();
        return probs(s, removed_class >= 0 ? &m : nullptr);
    }
    return expand_probs(probs(s, nullptr), row_to_label, num_classes);
}

Release make_release(Method method, const ModelParams& trained, const CsrMatrix& X_train,
                     std::span<const int> y_train, int c, const TrainConfig& train_cfg,
                     std::uint64_t relabel_seed, double cg_tol, int cg_max_iter) {
    const int k = trained.num_classes();
    Release rel;
    rel.method = method;
    rel.num_classes = k;
    rel.row_to_label.resize(k);
    for (int j = 0; j < k; ++j) rel.row_to_label[j] = j;

    if (method == Method::pre) {
        rel.params = trained;
        return rel;
    }

    check_class(c, k);
    rel.removed_class = c;
    switch (method) {
        case Method::hessian: {
            auto [updated, upd] = hessian_downweight(trained, X_train, y_train, c, cg_tol, cg_max_iter);
            rel.params = zero_class(updated, c).params;
            rel.update = std::move(upd);
            rel.has_update = true;
            break;
        }
        case Method::relabel: {
            const std::vector<int> y_mod = random_relabel(y_train, c, k, relabel_seed);
            GoldenModel g = golden_retrain(X_train, y_mod, c, k, train_cfg);
            rel.params = std::move(g.params);
            rel.row_to_label = std::move(g.new_to_old);
            break;
        }
        case Method::golden: {
            std::vector<int> keep;
            for (int i = 0; i < X_train.rows; ++i) {
                if (y_train[i] != c) keep.push_back(i);
            }
            const CsrMatrix X_ret = X_train.select_rows(keep);
            std::vector<int> y_ret(keep.size());
            for (std::size_t i = 0; i < keep.size(); ++i) y_ret[i] = y_train[keep[i]];
            GoldenModel g = golden_retrain(X_ret, y_ret, c, k, train_cfg);
            rel.params = std::move(g.params);
            rel.row_to_label = std::move(g.new_to_old);
            break;
        }
        case Method::pre: break;
    }
    return rel;
}

}  // namespace lethe
