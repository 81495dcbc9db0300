#pragma once

// Utility, agreement, and distributional diagnostics for released models.

#include <span>
#include <vector>

#include "lethe/softmax.hpp"
#include "lethe/unlearn.hpp"

namespace lethe {

// One margin observation: p_ref minus the best other-class probability.
struct MarginSample {
    double value = 0.0;
    int reference = -1;       // label the margin was measured against
    bool reassigned = false;  // reference came from next_top1, not ground truth
};

struct KsResult {
    double d = 0.0;  // sup |F_a - F_b|
    double p = 1.0;  // asymptotic two-sample p-value, clamped to [0, 1]
    int n_a = 0;
    int n_b = 0;
};

// Fraction of rows whose argmax (over active classes, lowest-id ties) equals
// the label. Plain top-1 accuracy over every row of X.
double accuracy(const ModelParams& model, const CsrMatrix& X, std::span<const int> y,
                const ActiveMask* mask = nullptr);

// Accuracy over test examples with true label != c under the released model.
// Errors when no eligible example exists.
double accuracy_excluding(const ReleasedModel& model, const CsrMatrix& X_test,
                          std::span<const int> y_test, int c);
double accuracy_excluding(const GoldenModel& model, const CsrMatrix& X_test,
                          std::span<const int> y_test);

// Fraction of deleted-class test docs where the released model and the golden
// model predict the same retained label (golden predictions mapped back to
// original ids). All rows of X_test_c must be deleted-class documents.
double agreement_on_deleted(const ReleasedModel& ours, const GoldenModel& golden,
                            const CsrMatrix& X_test_c);

// m(x; y) = p_y - max_{j != y} p_j over active classes. Errors when y is
// masked or no other active class exists.
double margin(const PredictionVector& p, int y);

// Two-sample Kolmogorov-Smirnov test. D is evaluated at every pooled sample
// point (exact ECDF sweep, ties handled); p uses the asymptotic Kolmogorov
// distribution at effective size n_a*n_b/(n_a+n_b). Errors on empty input.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

}  // namespace lethe
