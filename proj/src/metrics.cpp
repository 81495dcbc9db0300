#include "lethe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lethe {

double accuracy(const ModelParams& model, const CsrMatrix& X, std::span<const int> y,
                const ActiveMask* mask) {
    if (X.rows == 0) throw std::invalid_argument("accuracy: empty evaluation set");
    const DenseMat s = scores(model, X);
    int hits = 0;
    for (int i = 0; i < X.rows; ++i) {
        if (argmax_active(s.row(i), mask) == y[i]) ++hits;
    }
    return static_cast<double>(hits) / X.rows;
}

double accuracy_excluding(const ReleasedModel& model, const CsrMatrix& X_test,
                          std::span<const int> y_test, int c) {
    const ActiveMask mask = model.mask();
    const DenseMat s = scores(model.params, X_test);
    int hits = 0, eligible = 0;
    for (int i = 0; i < X_test.rows; ++i) {
        if (y_test[i] == c) continue;
        ++eligible;
        if (argmax_active(s.row(i), &mask) == y_test[i]) ++hits;
    }
    if (eligible == 0) throw std::invalid_argument("accuracy_excluding: no eligible examples");
    return static_cast<double>(hits) / eligible;
}

double accuracy_excluding(const GoldenModel& model, const CsrMatrix& X_test,
                          std::span<const int> y_test) {
    const DenseMat s = scores(model.params, X_test);
    int hits = 0, eligible = 0;
    for (int i = 0; i < X_test.rows; ++i) {
        if (y_test[i] == model.removed_class) continue;
        ++eligible;
        if (model.to_old(argmax_active(s.row(i), nullptr)) == y_test[i]) ++hits;
    }
    if (eligible == 0) throw std::invalid_argument("accuracy_excluding: no eligible examples");
    return static_cast<double>(hits) / eligible;
}

double agreement_on_deleted(const ReleasedModel& ours, const GoldenModel& golden,
                            const CsrMatrix& X_test_c) {
    if (X_test_c.rows == 0) throw std::invalid_argument("agreement_on_deleted: empty deleted test set");
    const ActiveMask mask = ours.mask();
    const DenseMat s_ours = scores(ours.params, X_test_c);
    const DenseMat s_gold = scores(golden.params, X_test_c);
    int agree = 0;
    for (int i = 0; i < X_test_c.rows; ++i) {
        const int a = argmax_active(s_ours.row(i), &mask);
        const int b = golden.to_old(argmax_active(s_gold.row(i), nullptr));
        if (a == b) ++agree;
    }
    return static_cast<double>(agree) / X_test_c.rows;
}

double margin(const PredictionVector& p, int y) {
    const int k = static_cast<int>(p.probs.size());
    if (y < 0 || y >= k || !p.active[y]) {
        throw std::invalid_argument("margin: reference label is not an active class");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
        if (j == y || !p.active[j]) continue;
        best = std::max(best, p.probs[j]);
    }
    if (best == -std::numeric_limits<double>::infinity()) {
        throw std::invalid_argument("margin: no competing active class");
    }
    return p.probs[y] - best;
}

namespace {

// Survival function of the Kolmogorov distribution, Q(lam) = 2 sum_{j>=1}
// (-1)^{j-1} exp(-2 j^2 lam^2). Alternating series with the usual
// convergence checks; non-convergence (lam near 0) means Q = 1.
double kolmogorov_q(double lam) {
    const double a2 = -2.0 * lam * lam;
    double fac = 2.0, sum = 0.0, term_prev = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = fac * std::exp(a2 * static_cast<double>(j) * j);
        sum += term;
        if (std::abs(term) <= 0.001 * term_prev || std::abs(term) <= 1e-8 * std::abs(sum)) {
            return std::clamp(sum, 0.0, 1.0);
        }
        fac = -fac;
        term_prev = std::abs(term);
    }
    return 1.0;
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    for (double v : sa) {
        if (!std::isfinite(v)) throw std::invalid_argument("ks_two_sample: non-finite sample value");
    }
    for (double v : sb) {
        if (!std::isfinite(v)) throw std::invalid_argument("ks_two_sample: non-finite sample value");
    }
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() || j < sb.size()) {
        double x;
        if (i == sa.size()) {
            x = sb[j];
        } else if (j == sb.size()) {
            x = sa[i];
        } else {
            x = std::min(sa[i], sb[j]);
        }
        while (i < sa.size() && sa[i] == x) ++i;
        while (j < sb.size() && sb[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }

    KsResult res;
    res.d = d;
    res.n_a = static_cast<int>(sa.size());
    res.n_b = static_cast<int>(sb.size());
    const double ne = na * nb / (na + nb);
    res.p = kolmogorov_q(std::sqrt(ne) * d);
    return res;
}

}  // namespace lethe
