#pragma once

// Per-cell experiment runner shared by the CLI and the acceptance tests:
// base-pipeline construction for one seed, release building, utility and
// privacy evaluation, and the retrain-vs-downweight benchmark.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lethe/config.hpp"
#include "lethe/corpus.hpp"
#include "lethe/metrics.hpp"
#include "lethe/privacy.hpp"
#include "lethe/serialize.hpp"

namespace lethe {

LabeledCorpus load_dataset(const ExperimentConfig& config);

LabeledCorpus subset(const LabeledCorpus& corpus, std::span<const int> indices);

// Everything derived from one (dataset, seed) pair: the split, the fitted
// pipeline, the feature matrices, and the pre-unlearning model.
struct SeedContext {
    std::uint64_t seed = 0;
    TrainTestSplit split;
    LabeledCorpus train_corpus;
    LabeledCorpus val_corpus;
    LabeledCorpus test_corpus;
    Vocabulary vocab;
    CsrMatrix X_train;
    CsrMatrix X_val;
    CsrMatrix X_test;
    ModelParams model;
};

// Fits the full pipeline from scratch (used by tests and cmd_train).
SeedContext build_seed_context(const LabeledCorpus& corpus, const ExperimentConfig& config,
                               std::uint64_t seed);

// Rebuilds the context from persisted base artifacts in `base_dir`; the
// dataset hash recorded in the split artifact must match `dataset_hash`.
SeedContext load_seed_context(const LabeledCorpus& corpus, const ExperimentConfig& config,
                              std::uint64_t seed, const std::string& base_dir,
                              const std::string& dataset_hash);

// Runs one unlearning method against the context's trained model.
// The relabel draw is seeded with ctx.seed + seed_offset::kRelabel.
Release build_release(const SeedContext& ctx, const ExperimentConfig& config, Method method,
                      int c);

struct UtilityMetrics {
    double acc_excluding = 0.0;
    bool has_agreement = false;
    double agreement = 0.0;
    double pre_acc_all = 0.0;       // pre-unlearning accuracy over all classes
    double pre_acc_retained = 0.0;  // pre-unlearning accuracy over labels != c
    KsResult ks;                    // retained test margins, pre vs post
};

UtilityMetrics evaluate_release(const SeedContext& ctx, const Release& release,
                                const Release* golden, int c);

// Margin samples backing the KS test and the histogram export.
struct MarginSets {
    std::vector<double> pre_true;         // retained test docs, pre model, true label
    std::vector<double> post_true;        // retained test docs, released model, true label
    std::vector<double> post_reassigned;  // deleted test docs, released model, next-top-1 label
};

MarginSets collect_margins(const SeedContext& ctx, const Release& release, int c);

// Shadow pool + attacker + target AUCs for one condition. Shadows are
// seeded with ctx.seed + seed_offset::kShadowBase.
MiaReport run_mia(const SeedContext& ctx, const ExperimentConfig& config, const Release& target,
                  int c);

struct BenchResult {
    std::vector<double> hessian_times;
    std::vector<double> golden_times;
    double hessian_median = 0.0;
    double golden_median = 0.0;
    double speedup = 0.0;  // golden_median / hessian_median
};

// Times hessian_downweight vs golden_retrain on the context's training
// features (featurization excluded from both paths).
BenchResult run_bench(const SeedContext& ctx, const ExperimentConfig& config, int c,
                      int repeats);

// Runs fn(i) for i in [0, count) on `workers` threads (0 = hardware
// concurrency, capped at count). Rethrows the first failure.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace lethe
