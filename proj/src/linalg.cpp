#include "lethe/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace lethe {

CsrMatrix CsrMatrix::select_rows(std::span<const int> idx) const {
    CsrMatrix out;
    out.rows = static_cast<int>(idx.size());
    out.cols = cols;
    out.row_ptr.resize(idx.size() + 1);
    std::int64_t count = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        count += row_ptr[idx[i] + 1] - row_ptr[idx[i]];
    }
    out.col.reserve(count);
    out.val.reserve(count);
    out.row_ptr[0] = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int r = idx[i];
        for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            out.col.push_back(col[k]);
            out.val.push_back(val[k]);
        }
        out.row_ptr[i + 1] = static_cast<std::int64_t>(out.col.size());
    }
    return out;
}

std::vector<double> spmv(const CsrMatrix& X, std::span<const double> v) {
    if (static_cast<int>(v.size()) != X.cols) {
        throw std::invalid_argument("spmv: vector length " + std::to_string(v.size()) +
                                    " does not match matrix columns " + std::to_string(X.cols));
    }
    std::vector<double> y(X.rows, 0.0);
    for (int i = 0; i < X.rows; ++i) {
        double acc = 0.0;
        for (std::int64_t k = X.row_ptr[i]; k < X.row_ptr[i + 1]; ++k) {
            acc += X.val[k] * v[X.col[k]];
        }
        y[i] = acc;
    }
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::fabs(x));
    return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

CgResult cg_solve(const LinOp& apply, std::span<const double> b, double tol, int max_iter) {
    if (tol <= 0.0) throw std::invalid_argument("cg_solve: tol must be positive");
    const std::size_t m = b.size();

    CgResult res;
    res.x.assign(m, 0.0);

    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        res.converged = true;
        return res;  // zero right-hand side: x = 0 exactly, no iterations
    }
    const double threshold = tol * std::max(1.0, bnorm);

    std::vector<double> r(b.begin(), b.end());  // r = b - A*0
    std::vector<double> p = r;
    std::vector<double> ap(m);

    double rr = dot(r, r);
    double best_rnorm = std::sqrt(rr);
    std::vector<double> best_x = res.x;

    int it = 0;
    while (it < max_iter && std::sqrt(rr) > threshold) {
        apply(p, ap);
        const double pap = dot(p, ap);
        if (!std::isfinite(pap)) {
            throw std::runtime_error("cg_solve: non-finite value in operator product");
        }
        if (pap <= 0.0) {
            // Operator is not positive definite on this direction; the ridge
            // term should prevent this. Stop with the best iterate so far.
            break;
        }
        const double alpha = rr / pap;
        axpy(alpha, p, res.x);
        axpy(-alpha, ap, r);
        const double rr_next = dot(r, r);
        if (!std::isfinite(rr_next)) {
            throw std::runtime_error("cg_solve: non-finite residual");
        }
        const double rnorm = std::sqrt(rr_next);
        if (rnorm < best_rnorm) {
            best_rnorm = rnorm;
            best_x = res.x;
        }
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_next;
        ++it;
    }

    res.iterations = it;
    res.residual_norm = best_rnorm;
    res.converged = best_rnorm <= threshold;
    if (best_rnorm < std::sqrt(rr)) res.x = best_x;
    return res;
}

}  // namespace lethe
