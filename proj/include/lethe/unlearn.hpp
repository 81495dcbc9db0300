#pragma once

// Class-level unlearning for linear softmax models: the class-gradient
// Hessian downweight update, release-time channel zeroing, next-top-1
// reassignment, and the random-relabel / full-retrain baselines.

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lethe/linalg.hpp"
#include "lethe/rng.hpp"
#include "lethe/softmax.hpp"

namespace lethe {

// Diagnostics of one downweight update.
struct UnlearnUpdate {
    DenseMat delta;                    // H^{-1} g_c, K x d
    double class_gradient_norm = 0.0;  // ||g_c||_2 over the flattened matrix
    CgResult cg;
    bool cg_warning = false;  // CG hit the iteration cap without converging
    double wall_time = 0.0;   // seconds spent in the solve + apply
};

// Model as released to clients: the removed class's row is zero and the
// class is masked out of every prediction. noise_sigma/noise_seed record
// the release-time logit noise configuration (0 = none).
struct ReleasedModel {
    ModelParams params;
    int removed_class = -1;
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;

    ActiveMask mask() const {
        ActiveMask m(params.num_classes(), 1);
        m[removed_class] = 0;
        return m;
    }
};

// Retrained-from-scratch reference over the retained classes. Labels are
// compacted to 0..K-2; new_to_old maps them back to original ids.
struct GoldenModel {
    ModelParams params;
    int removed_class = -1;
    std::vector<int> new_to_old;

    int to_old(int compact) const { return new_to_old[compact]; }
    int to_new(int old_label) const { return old_label < removed_class ? old_label : old_label - 1; }
};

// g_c = sum over rows of (p_i - e_c) x_i^T. Unregularized: this is the
// deleted data's contribution to the training gradient, nothing else.
// All rows of X_c must be deleted-class documents.
DenseMat class_gradient(const ModelParams& model, const CsrMatrix& X_c, int c);

// Solves H.delta = g by CG and returns w + delta (flattened). At a trained
// optimum the retained objective's gradient equals -g, so the Newton
// correction that cancels it to first order is +H^{-1}g. Shared by
// hessian_downweight and the quadratic-objective tests.
std::vector<double> apply_downweight(std::span<const double> w, const LinOp& hessian_apply,
                                     std::span<const double> g, double cg_tol, int cg_max_iter,
                                     CgResult* stats = nullptr);

// One inexact-Newton downweight step removing class c. The Hessian is the
// full-dataset Hessian of the regularized loss at the current W, applied via
// hvp; g_c comes from the rows of X_all labeled c. Empty deleted set is a
// bit-exact no-op. CG hitting max_iter sets cg_warning and keeps the best
// iterate; non-finite values are a hard error.
std::pair<ModelParams, UnlearnUpdate> hessian_downweight(const ModelParams& model,
                                                         const CsrMatrix& X_all,
                                                         std::span<const int> y_all, int c,
                                                         double cg_tol = 1e-4,
                                                         int cg_max_iter = 200);

// Zeroes row c of W and masks the class; probabilities renormalize over the
// remaining labels. Idempotent for a fixed c.
ReleasedModel zero_class(const ModelParams& model, int c);

// Highest-scoring label != c under the pre-unlearning model; ties broken by
// lowest label id. Errors when no other label exists.
int next_top1(const ModelParams& pre_model, SparseRowView x, int c);

// Copies y, replacing every label == c with a uniform draw from the
// remaining labels. Deterministic per seed.
std::vector<int> random_relabel(std::span<const int> y, int c, int num_classes,
                                std::uint64_t seed);

// Fresh training on the retained rows with labels compacted to K-1 classes.
// y_retained holds original label ids, none equal to c.
GoldenModel golden_retrain(const CsrMatrix& X_retained, std::span<const int> y_retained, int c,
                           int num_classes, const TrainConfig& config);

// Released-model probabilities for every row of X; masked class is exactly 0.
DenseMat released_probs(const ReleasedModel& model, const CsrMatrix& X);

// Same with i.i.d. Gaussian noise (std sigma) added to each retained-class
// logit before the masked softmax, fresh per example. sigma = 0 draws
// nothing and matches released_probs bit-exactly.
DenseMat released_probs_noisy(const ReleasedModel& model, const CsrMatrix& X, double sigma,
                              Rng& rng);

// How a released model was produced. "pre" is the untouched model before any
// deletion, kept as the reference condition.
enum class Method { pre, hessian, relabel, golden };

const char* method_name(Method m);
bool parse_method(std::string_view name, Method* out);

// Uniform view of a released predictor regardless of method. Probabilities
// are reported over the original K label ids; removed classes carry exactly
// 0. golden/relabel hold a compact (K-1)-row head; row_to_label maps head
// rows back to original ids.
struct Release {
    Method method = Method::pre;
    int num_classes = 0;
    int removed_class = -1;  // -1 for pre
    ModelParams params;
    std::vector<int> row_to_label;
    UnlearnUpdate update;  // populated for hessian only
    bool has_update = false;
    double noise_sigma = 0.0;  // release-time logit noise configuration
    std::uint64_t noise_seed = 0;

    ActiveMask active() const;
    DenseMat probs_full(const CsrMatrix& X) const;
    // Gaussian noise (std sigma) on every live logit before the softmax,
    // fresh per example; sigma = 0 draws nothing.
    DenseMat probs_full_noisy(const CsrMatrix& X, double sigma, Rng& rng) const;
};

// Runs one unlearning method against a trained model and its training data.
// hessian: downweight then zero_class. relabel: random_relabel(seed) on the
// training labels, then a compact retrain (same head shape as golden).
// golden: compact retrain on the retained rows. pre: the model as-is.
Release make_release(Method method, const ModelParams& trained, const CsrMatrix& X_train,
                     std::span<const int> y_train, int c, const TrainConfig& train_cfg,
                     std::uint64_t relabel_seed, double cg_tol = 1e-4, int cg_max_iter = 200);

}  // namespace lethe
