#pragma once

// Shadow-model membership inference: attack features, the shadow pool, a
// logistic-regression attacker, ROC-AUC by group, and the release-noise
// trade-off sweep.

#include <cstdint>
#include <span>
#include <vector>

#include "lethe/corpus.hpp"
#include "lethe/rng.hpp"
#include "lethe/softmax.hpp"
#include "lethe/tfidf.hpp"
#include "lethe/unlearn.hpp"

namespace lethe {

// phi(x) = [active-class probabilities | entropy | -log p_top | top-2 gap].
// Probabilities appear in ascending label order, active classes only, so the
// vector has (#active + 3) entries. Natural logs, 0*log 0 = 0, top class
// ties broken by lowest id. Needs >= 2 active classes.
std::vector<double> attack_features(const PredictionVector& p);

// Feature rows pooled over all shadows, one row per (shadow, example).
struct ShadowPool {
    DenseMat features;
    std::vector<std::uint8_t> member;  // 1 = shadow training member
    std::vector<int> shadow_id;
    std::vector<int> true_label;  // original corpus label of the example
    int num_shadows = 0;
};

// attack_features for every row of a full-width probability matrix.
DenseMat features_from_probs(const DenseMat& probs, const ActiveMask& active);

// Trains S shadow models on disjoint 50/50 member/holdout splits of the
// corpus (shadow s draws its split with seed+s), fits the full pipeline on
// each member half, applies `method` with deletion class c (ignored for
// pre), and emits attack features plus member bits for every member and
// holdout example. Training failures abort the run.
ShadowPool build_shadow_pool(const LabeledCorpus& corpus, const PipelineConfig& pipeline_cfg,
                             const TrainConfig& train_cfg, Method method, int c, int num_shadows,
                             std::uint64_t seed, double cg_tol = 1e-4, int cg_max_iter = 200);

// Binary logistic attacker over standardized features (a constant column is
// appended after standardization to act as the intercept).
struct Attacker {
    ModelParams lr;  // 2 x (F+1)
    std::vector<double> mean;
    std::vector<double> scale;

    double score(std::span<const double> features) const;  // P(member)
    std::vector<double> score_rows(const DenseMat& features) const;
    // Decision weights (member row minus non-member row), length F+1.
    std::vector<double> coefficients() const;
};

// Fits the attacker on pooled shadow features with class-balanced weights
// w_i = 1 / (2 n_class(i)), which makes the fit invariant to duplicating
// every row. attacker_C is the inverse regularization strength.
Attacker train_attacker(const DenseMat& features, std::span<const std::uint8_t> member,
                        double attacker_C = 1000.0);

// Mann-Whitney AUC with average ranks on ties: P(score_pos > score_neg) +
// 0.5 P(equal). Errors unless both label values are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MiaReport {
    bool has_retained = false;
    bool has_target = false;
    double auc_retained = 0.0;  // examples with true label != c
    double auc_target = 0.0;    // examples with true label == c
    int n_retained = 0;
    int n_target = 0;
    int n_retained_members = 0;
    int n_target_members = 0;
    std::vector<double> coefficients;
};

// Scores member rows (the target's training docs) against nonmember rows
// (its test docs) and reports AUC under the two true-label filters. A filter
// group missing a membership value reports that AUC absent.
MiaReport evaluate_target(const Attacker& attacker, const DenseMat& member_features,
                          std::span<const int> member_labels, const DenseMat& nonmember_features,
                          std::span<const int> nonmember_labels, int c);

struct SweepRow {
    double C = 0.0;
    double tau = 0.0;
    bool found = false;        // some grid sigma met AUC_ret <= tau
    double sigma_star = 0.0;   // smallest such sigma
    double auc_retained = 0.0; // AUC_ret at sigma_star
    double acc_excluding = 0.0;  // retained-class accuracy at sigma_star
};

// Full noise trade-off: for each C, retrain the target, build matching
// hessian shadows, train the attacker on noise-free shadow features, then
// evaluate AUC_ret with Gaussian logit noise (std sigma) on every released
// prediction. sigma* per tau is the smallest grid sigma with AUC_ret <= tau.
// Noise draws use seed+kNoise, re-seeded per sigma; sigma = 0 draws nothing.
std::vector<SweepRow> noise_sweep(const LabeledCorpus& train_corpus,
                                  const LabeledCorpus& test_corpus,
                                  const PipelineConfig& pipeline_cfg,
                                  const TrainConfig& base_train_cfg, int c,
                                  std::span<const double> c_grid, std::span<const double> tau_grid,
                                  std::span<const double> sigma_grid, int num_shadows,
                                  std::uint64_t seed, double cg_tol = 1e-4, int cg_max_iter = 200);

}  // namespace lethe
