#ifndef LETHE_SOFTMAX_HPP
#define LETHE_SOFTMAX_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lethe/linalg.hpp"

namespace lethe {

// Linear-softmax classifier, no intercept. W is K x d row-major; lambda is
// the L2 strength (lambda = 1/C). The objective everywhere is the SUM of
// per-sample cross-entropy plus (lambda/2)||W||^2 -- not the mean. Training
// accuracy under a given C depends on this convention.
struct ModelParams {
    DenseMat W;       // K x d
    double lambda = 0.1;

    int num_classes() const { return W.rows; }
    int dim() const { return W.cols; }
};

struct TrainConfig {
    double C = 10.0;          // inverse regularization strength; lambda = 1/C
    double grad_tol = 1e-5;   // stop when ||gradient||_inf <= grad_tol
    int max_epochs = 500;
    int memory = 10;          // quasi-Newton history size
    std::uint64_t seed = 0;   // reserved; W0 = 0 so training is seed-free
    bool gradient_descent = false;  // fallback optimizer, same stopping rule

    double lambda() const { return 1.0 / C; }
};

// Per-class masking: 1 = active. Inactive classes get exactly zero
// probability and never win an argmax.
using ActiveMask = std::vector<std::uint8_t>;

// Probabilities over classes with the mask that produced them.
struct PredictionVector {
    std::vector<double> probs;  // size K; masked entries exactly 0
    ActiveMask active;          // size K
};

// Row i of the result is W x_i.
DenseMat scores(const ModelParams& model, const CsrMatrix& X);

// Numerically stable softmax over active classes, row by row. Masked
// classes come out exactly 0. mask == nullptr means all classes active.
DenseMat probs(const DenseMat& score_mat, const ActiveMask* mask = nullptr);

PredictionVector predict_row(const ModelParams& model, SparseRowView x, const ActiveMask* mask = nullptr);

// argmax with the project-wide tie rule: lowest class id wins. Used by
// predictions, reassignment, and the attacker's top-class feature alike.
int argmax_active(std::span<const double> values, const ActiveMask* mask = nullptr);

// Sum of cross-entropy over samples plus (lambda/2)||W||^2. An optional
// per-sample weight vector scales the data term only.
double loss(const ModelParams& model, const CsrMatrix& X, std::span<const int> y,
            std::span<const double> weights = {});

// G = sum_i w_i (p_i - e_{y_i}) x_i^T + lambda W, as a K x d matrix.
DenseMat gradient(const ModelParams& model, const CsrMatrix& X, std::span<const int> y,
                  std::span<const double> weights = {});

// Hessian-vector product of the full objective at W, applied to V:
//   H[V] = ((P .* U) - (P .* (s 1^T)))^T X + lambda V,
// with U = X V^T and s_i = sum_k P_ik U_ik. Exact for this model, linear
// and symmetric in V, and positive definite for lambda > 0.
DenseMat hvp(const ModelParams& model, const CsrMatrix& X, const DenseMat& V);

// Flat-buffer form used by the CG callback; out = H[V].
void hvp_into(const ModelParams& model, const CsrMatrix& X, std::span<const double> V,
              std::span<double> out);

// Same product with the per-row probabilities P (n x K) precomputed at W.
// P is constant across a CG solve, so callers that apply H repeatedly can
// skip the score pass; this computes identical output to hvp_into.
void hvp_probs_into(const DenseMat& P, double lambda, const CsrMatrix& X,
                    std::span<const double> V, std::span<double> out);

// Feature-major variant: V and out hold the d x K transpose (entry (j, t)
// of the K x d matrix at index t*K + j). All K class values of one feature
// then share a cache line, which is what the CG inner loop wants.
void hvp_probs_feature_major_into(const DenseMat& P, double lambda, const CsrMatrix& X,
                                  std::span<const double> V, std::span<double> out);

// Quasi-Newton (limited-memory, backtracking line search) minimization from
// W0 = 0. Every class in 0..K-1 must appear in y. Throws if the loss goes
// non-finite.
ModelParams train(const CsrMatrix& X, std::span<const int> y, int num_classes,
                  const TrainConfig& config, std::span<const double> weights = {});

}  // namespace lethe

#endif  // LETHE_SOFTMAX_HPP
