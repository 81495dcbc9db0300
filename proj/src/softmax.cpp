#include "lethe/softmax.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace lethe {

namespace {

void check_dims(const ModelParams& model, const CsrMatrix& X) {
    if (X.cols != model.dim()) {
        throw std::invalid_argument("feature dimension " + std::to_string(X.cols) +
                                    " does not match model dimension " + std::to_string(model.dim()));
    }
}

// Stable softmax of one score row into p (over active classes only).
void softmax_row(std::span<const double> s, const ActiveMask* mask, std::span<double> p) {
    const int k = static_cast<int>(s.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
        if (mask && !(*mask)[j]) continue;
        mx = std::max(mx, s[j]);
    }
    double z = 0.0;
    for (int j = 0; j < k; ++j) {
        if (mask && !(*mask)[j]) {
            p[j] = 0.0;
        } else {
            p[j] = std::exp(s[j] - mx);
            z += p[j];
        }
    }
    for (int j = 0; j < k; ++j) p[j] /= z;
    if (mask) {
        for (int j = 0; j < k; ++j) {
            if (!(*mask)[j]) p[j] = 0.0;  // keep masked entries exactly zero
        }
    }
}

}  // namespace

DenseMat scores(const ModelParams& model, const CsrMatrix& X) {
    check_dims(model, X);
    const int k = model.num_classes();
    DenseMat s(X.rows, k);
    for (int i = 0; i < X.rows; ++i) {
        const auto row = X.row(i);
        auto out = s.row(i);
        for (int j = 0; j < k; ++j) {
            const auto w = model.W.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < row.cols.size(); ++t) acc += row.vals[t] * w[row.cols[t]];
            out[j] = acc;
        }
    }
    return s;
}

DenseMat probs(const DenseMat& score_mat, const ActiveMask* mask) {
    if (mask) {
        if (static_cast<int>(mask->size()) != score_mat.cols) {
            throw std::invalid_argument("mask size does not match class count");
        }
        if (std::count(mask->begin(), mask->end(), std::uint8_t{1}) == 0) {
            throw std::invalid_argument("mask leaves no active class");
        }
    }
    DenseMat p(score_mat.rows, score_mat.cols);
    for (int i = 0; i < score_mat.rows; ++i) softmax_row(score_mat.row(i), mask, p.row(i));
    return p;
}

PredictionVector predict_row(const ModelParams& model, SparseRowView x, const ActiveMask* mask) {
    const int k = model.num_classes();
    std::vector<double> s(k, 0.0);
    for (int j = 0; j < k; ++j) {
        const auto w = model.W.row(j);
        double acc = 0.0;
        for (std::size_t t = 0; t < x.cols.size(); ++t) acc += x.vals[t] * w[x.cols[t]];
        s[j] = acc;
    }
    PredictionVector out;
    out.probs.resize(k);
    out.active = mask ? *mask : ActiveMask(k, 1);
    softmax_row(s, &out.active, out.probs);
    return out;
}

int argmax_active(std::span<const double> values, const ActiveMask* mask) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(values.size()); ++j) {
        if (mask && !(*mask)[j]) continue;
        if (values[j] > best_v) {  // strict: ties keep the lowest id
            best_v = values[j];
            best = j;
        }
    }
    if (best < 0) throw std::invalid_argument("argmax_active: no active class");
    return best;
}

namespace {

// Shared core: data-term loss and, if grad != nullptr, the full gradient
// including the ridge term. One pass over the rows.
double loss_core(const ModelParams& model, const CsrMatrix& X, std::span<const int> y,
                 std::span<const double> weights, DenseMat* grad) {
    check_dims(model, X);
    const int k = model.num_classes();
    if (grad) *grad = DenseMat(k, model.dim());

    std::vector<double> s(k), p(k);
    double total = 0.0;
    for (int i = 0; i < X.rows; ++i) {
        if (y[i] < 0 || y[i] >= k) throw std::invalid_argument("label out of range");
        const double wgt = weights.empty() ? 1.0 : weights[i];
        const auto row = X.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            const auto wrow = model.W.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < row.cols.size(); ++t) acc += row.vals[t] * wrow[row.cols[t]];
            s[j] = acc;
            mx = std::max(mx, acc);
        }
        double z = 0.0;
        for (int j = 0; j < k; ++j) {
            p[j] = std::exp(s[j] - mx);
            z += p[j];
        }
        // log-sum-exp form; no probability clipping anywhere
        total += wgt * (std::log(z) + mx - s[y[i]]);
        if (grad) {
            for (int j = 0; j < k; ++j) {
                const double coef = wgt * (p[j] / z - (j == y[i] ? 1.0 : 0.0));
                if (coef == 0.0) continue;
                auto g = grad->row(j);
                for (std::size_t t = 0; t < row.cols.size(); ++t) g[row.cols[t]] += coef * row.vals[t];
            }
        }
    }

    double sq = 0.0;
    for (double w : model.W.v) sq += w * w;
    total += 0.5 * model.lambda * sq;
    if (grad) {
        for (std::size_t t = 0; t < grad->v.size(); ++t) grad->v[t] += model.lambda * model.W.v[t];
    }
    return total;
}

}  // namespace

double loss(const ModelParams& model, const CsrMatrix& X, std::span<const int> y,
            std::span<const double> weights) {
    return loss_core(model, X, y, weights, nullptr);
}

DenseMat gradient(const ModelParams& model, const CsrMatrix& X, std::span<const int> y,
                  std::span<const double> weights) {
    DenseMat g;
    loss_core(model, X, y, weights, &g);
    return g;
}

void hvp_into(const ModelParams& model, const CsrMatrix& X, std::span<const double> V,
              std::span<double> out) {
    check_dims(model, X);
    const int k = model.num_classes();
    const int d = model.dim();

    for (std::size_t t = 0; t < out.size(); ++t) out[t] = model.lambda * V[t];

    std::vector<double> s(k), p(k), u(k);
    for (int i = 0; i < X.rows; ++i) {
        const auto row = X.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            const auto wrow = model.W.row(j);
            const double* vrow = V.data() + static_cast<std::size_t>(j) * d;
            double sacc = 0.0, uacc = 0.0;
            for (std::size_t t = 0; t < row.cols.size(); ++t) {
                sacc += row.vals[t] * wrow[row.cols[t]];
                uacc += row.vals[t] * vrow[row.cols[t]];
            }
            s[j] = sacc;
            u[j] = uacc;
            mx = std::max(mx, sacc);
        }
        double z = 0.0;
        for (int j = 0; j < k; ++j) {
            p[j] = std::exp(s[j] - mx);
            z += p[j];
        }
        double srow = 0.0;  // s_i = sum_k P_ik U_ik
        for (int j = 0; j < k; ++j) {
            p[j] /= z;
            srow += p[j] * u[j];
        }
        for (int j = 0; j < k; ++j) {
            const double coef = p[j] * (u[j] - srow);
            if (coef == 0.0) continue;
            double* orow = out.data() + static_cast<std::size_t>(j) * d;
            for (std::size_t t = 0; t < row.cols.size(); ++t) orow[row.cols[t]] += coef * row.vals[t];
        }
    }
}

void hvp_probs_into(const DenseMat& P, double lambda, const CsrMatrix& X,
                    std::span<const double> V, std::span<double> out) {
    if (P.rows != X.rows) throw std::invalid_argument("hvp_probs_into: P rows != X rows");
    const int k = P.cols;
    const int d = X.cols;

    for (std::size_t t = 0; t < out.size(); ++t) out[t] = lambda * V[t];

    // Each sparse entry is visited once per pass with the class loop inside;
    // for small K this keeps u/coef in registers and reads cols/vals once.
    std::vector<double> u(k), coef(k);
    for (int i = 0; i < X.rows; ++i) {
        const auto row = X.row(i);
        const double* prow = P.row(i).data();
        std::fill(u.begin(), u.end(), 0.0);
        for (std::size_t t = 0; t < row.cols.size(); ++t) {
            const std::size_t col = static_cast<std::size_t>(row.cols[t]);
            const double val = row.vals[t];
            for (int j = 0; j < k; ++j) u[j] += val * V[static_cast<std::size_t>(j) * d + col];
        }
        double srow = 0.0;
        for (int j = 0; j < k; ++j) srow += prow[j] * u[j];
        for (int j = 0; j < k; ++j) coef[j] = prow[j] * (u[j] - srow);
        for (std::size_t t = 0; t < row.cols.size(); ++t) {
            const std::size_t col = static_cast<std::size_t>(row.cols[t]);
            const double val = row.vals[t];
            for (int j = 0; j < k; ++j) {
                out[static_cast<std::size_t>(j) * d + col] += coef[j] * val;
            }
        }
    }
}

void hvp_probs_feature_major_into(const DenseMat& P, double lambda, const CsrMatrix& X,
                                  std::span<const double> V, std::span<double> out) {
    if (P.rows != X.rows) throw std::invalid_argument("hvp_probs_feature_major_into: P rows != X rows");
    const int k = P.cols;

    for (std::size_t t = 0; t < out.size(); ++t) out[t] = lambda * V[t];

    std::vector<double> u(k), coef(k);
    for (int i = 0; i < X.rows; ++i) {
        const auto row = X.row(i);
        const double* prow = P.row(i).data();
        std::fill(u.begin(), u.end(), 0.0);
        for (std::size_t t = 0; t < row.cols.size(); ++t) {
            const double* vcol = V.data() + static_cast<std::size_t>(row.cols[t]) * k;
            const double val = row.vals[t];
            for (int j = 0; j < k; ++j) u[j] += val * vcol[j];
        }
        double srow = 0.0;
        for (int j = 0; j < k; ++j) srow += prow[j] * u[j];
        for (int j = 0; j < k; ++j) coef[j] = prow[j] * (u[j] - srow);
        for (std::size_t t = 0; t < row.cols.size(); ++t) {
            double* ocol = out.data() + static_cast<std::size_t>(row.cols[t]) * k;
            const double val = row.vals[t];
            for (int j = 0; j < k; ++j) ocol[j] += coef[j] * val;
        }
    }
}

DenseMat hvp(const ModelParams& model, const CsrMatrix& X, const DenseMat& V) {
    if (V.rows != model.num_classes() || V.cols != model.dim()) {
        throw std::invalid_argument("hvp: V shape does not match W");
    }
    DenseMat out(V.rows, V.cols);
    hvp_into(model, X, V.v, out.v);
    return out;
}

namespace {

struct LbfgsPair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

// Two-loop recursion; falls back to -g when the history is empty.
void lbfgs_direction(const std::deque<LbfgsPair>& hist, std::span<const double> g,
                     std::vector<double>& d) {
    d.assign(g.begin(), g.end());
    std::vector<double> alpha(hist.size());
    for (std::size_t idx = hist.size(); idx-- > 0;) {
        const auto& pair = hist[idx];
        alpha[idx] = pair.rho * dot(pair.s, d);
        axpy(-alpha[idx], pair.y, d);
    }
    if (!hist.empty()) {
        const auto& last = hist.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& t : d) t *= gamma;
    }
    for (std::size_t idx = 0; idx < hist.size(); ++idx) {
        const auto& pair = hist[idx];
        const double beta = pair.rho * dot(pair.y, d);
        axpy(alpha[idx] - beta, pair.s, d);
    }
    for (double& t : d) t = -t;
}

}  // namespace

ModelParams train(const CsrMatrix& X, std::span<const int> y, int num_classes,
                  const TrainConfig& config, std::span<const double> weights) {
    if (num_classes < 2) throw std::invalid_argument("train: need at least 2 classes");
    if (static_cast<int>(y.size()) != X.rows) throw std::invalid_argument("train: label count mismatch");
    std::vector<int> present(num_classes, 0);
    for (int label : y) {
        if (label < 0 || label >= num_classes) throw std::invalid_argument("train: label out of range");
        present[label] = 1;
    }
    for (int j = 0; j < num_classes; ++j) {
        if (!present[j]) {
            throw std::invalid_argument("train: class " + std::to_string(j) + " has no examples");
        }
    }

    ModelParams model;
    model.W = DenseMat(num_classes, X.cols);
    model.lambda = config.lambda();

    DenseMat grad;
    double f = loss_core(model, X, y, weights, &grad);
    if (!std::isfinite(f)) throw std::runtime_error("train: non-finite loss at start");

    std::deque<LbfgsPair> hist;
    std::vector<double> dir, w_prev, g_prev;
    const double c1 = 1e-4;

    for (int iter = 0; iter < config.max_epochs; ++iter) {
        if (norm_inf(grad.v) <= config.grad_tol) break;

        if (config.gradient_descent || hist.empty()) {
            dir.assign(grad.v.begin(), grad.v.end());
            for (double& t : dir) t = -t;
        } else {
            lbfgs_direction(hist, grad.v, dir);
        }

        double slope = dot(grad.v, dir);
        if (slope >= 0.0) {  // not a descent direction; restart from steepest descent
            hist.clear();
            dir.assign(grad.v.begin(), grad.v.end());
            for (double& t : dir) t = -t;
            slope = dot(grad.v, dir);
        }

        // Backtracking with Armijo sufficient decrease. The very first step
        // has no curvature information, so scale it by the gradient norm.
        double step = (hist.empty() || config.gradient_descent)
                          ? 1.0 / std::max(1.0, norm2(grad.v))
                          : 1.0;
        w_prev = model.W.v;
        g_prev = grad.v;
        double f_new = f;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            model.W.v = w_prev;
            axpy(step, dir, model.W.v);
            f_new = loss_core(model, X, y, weights, &grad);
            if (!std::isfinite(f_new)) throw std::runtime_error("train: non-finite loss");
            if (f_new <= f + c1 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            model.W.v = w_prev;
            loss_core(model, X, y, weights, &grad);
            break;  // line search exhausted; gradient is numerically flat
        }

        if (!config.gradient_descent) {
            LbfgsPair pair;
            pair.s.resize(model.W.v.size());
            pair.y.resize(model.W.v.size());
            for (std::size_t t = 0; t < pair.s.size(); ++t) {
                pair.s[t] = model.W.v[t] - w_prev[t];
                pair.y[t] = grad.v[t] - g_prev[t];
            }
            const double sy = dot(pair.s, pair.y);
            if (sy > 1e-12 * norm2(pair.s) * norm2(pair.y)) {
                pair.rho = 1.0 / sy;
                hist.push_back(std::move(pair));
                if (static_cast<int>(hist.size()) > config.memory) hist.pop_front();
            }
        }
        f = f_new;
    }
    return model;
}

}  // namespace lethe
