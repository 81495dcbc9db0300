#ifndef LETHE_LINALG_HPP
#define LETHE_LINALG_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace lethe {

// Dense row-major matrix of finite reals.
struct DenseMat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;  // rows * cols, row-major

    DenseMat() = default;
    DenseMat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    std::span<double> row(int r) { return {v.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
    std::span<const double> row(int r) const { return {v.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
};

// One row of a CSR matrix, viewed in place.
struct SparseRowView {
    std::span<const int> cols;
    std::span<const double> vals;
};

// Sparse row-major (CSR) matrix. Column indices strictly increase within
// each row; all stored values are finite.
struct CsrMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::int64_t> row_ptr;  // rows + 1 offsets
    std::vector<int> col;
    std::vector<double> val;

    CsrMatrix() : row_ptr(1, 0) {}

    std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }

    SparseRowView row(int i) const {
        const auto b = static_cast<std::size_t>(row_ptr[i]);
        const auto e = static_cast<std::size_t>(row_ptr[i + 1]);
        return {{col.data() + b, e - b}, {val.data() + b, e - b}};
    }

    // New matrix holding the given rows, in the given order.
    CsrMatrix select_rows(std::span<const int> idx) const;
};

// Result of a conjugate-gradient solve.
struct CgResult {
    std::vector<double> x;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// y = X v. Throws on dimension mismatch.
std::vector<double> spmv(const CsrMatrix& X, std::span<const double> v);

// Linear operator on flat vectors: apply(in, out) computes out = A in.
using LinOp = std::function<void(std::span<const double>, std::span<double>)>;

// Standard CG from x0 = 0 for SPD operators. Stops when
// ||r|| <= tol * max(1, ||b||) or at max_iter; returns the iterate with the
// smallest residual seen. b = 0 short-circuits to x = 0 in 0 iterations.
// Throws if a non-finite value appears (broken operator or missing ridge).
CgResult cg_solve(const LinOp& apply, std::span<const double> b, double tol, int max_iter);

// Small vector helpers shared across modules.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);  // y += alpha x

}  // namespace lethe

#endif  // LETHE_LINALG_HPP
