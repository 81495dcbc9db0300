// Acceptance gate. Runs the numerical-correctness suite, the property
// suites, and the method-behavior suite on the bundled synthetic corpus,
// printing one [PASS]/[FAIL] line per criterion. Exits 0 iff everything
// passed. Budgets: numerical < 1 minute, method suite < 5 minutes.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lethe/config.hpp"
#include "lethe/corpus.hpp"
#include "lethe/experiment.hpp"
#include "lethe/linalg.hpp"
#include "lethe/metrics.hpp"
#include "lethe/privacy.hpp"
#include "lethe/rng.hpp"
#include "lethe/softmax.hpp"
#include "lethe/synth.hpp"
#include "lethe/unlearn.hpp"
#include "oracles.hpp"

using namespace lethe;

namespace {

int g_failures = 0;

void line(const char* tag, const std::string& text, const std::string& detail) {
    std::printf("[%s] %s (%s)\n", tag, text.c_str(), detail.c_str());
    std::fflush(stdout);
}

void criterion(int id, const std::string& text, bool ok, const std::string& detail) {
    line(ok ? "PASS" : "FAIL", "criterion " + std::to_string(id) + ": " + text, detail);
    if (!ok) ++g_failures;
}

void property(const std::string& text, bool ok, const std::string& detail) {
    line(ok ? "PASS" : "FAIL", "property: " + text, detail);
    if (!ok) ++g_failures;
}

void budget(const std::string& text, double seconds, double limit) {
    char detail[64];
    std::snprintf(detail, sizeof(detail), "%.1fs of %.0fs", seconds, limit);
    line(seconds < limit ? "PASS" : "FAIL", text, detail);
    if (seconds >= limit) ++g_failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

double now_minus(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct Instance {
    CsrMatrix X;
    std::vector<int> y;
    ModelParams model;
};

Instance random_instance(Rng& rng) {
    Instance inst;
    const int k = 2 + static_cast<int>(rng.uniform_index(4));  // K <= 5
    const int d = 2 + static_cast<int>(rng.uniform_index(7));  // d <= 8
    const int n = std::max(k, 5 + static_cast<int>(rng.uniform_index(26)));  // n <= 30
    inst.X = oracle::random_csr(rng, n, d, 0.6, 1.0);
    inst.y = oracle::random_labels(rng, n, k);
    inst.model.W = oracle::random_dense(rng, k, d, 0.5);
    inst.model.lambda = 0.05 + rng.uniform_real();
    return inst;
}

// ---- numerical-correctness suite ----------------------------------------

void run_numerical_suite() {
    Rng rng(2024);
    std::vector<Instance> instances;
    for (int t = 0; t < 10; ++t) instances.push_back(random_instance(rng));

    // 1. analytic gradient vs central finite differences of the loss
    double grad_err = 0.0;
    for (const Instance& inst : instances) {
        const DenseMat g = gradient(inst.model, inst.X, inst.y);
        const DenseMat fd = oracle::fd_gradient(inst.model, inst.X, inst.y, 1e-6);
        grad_err = std::max(grad_err, oracle::max_abs_diff(g.v, fd.v));
    }
    criterion(1, "gradient matches central finite differences", grad_err <= 1e-5,
              fmt("max err %.2e over 10 instances, tol 1e-05", grad_err));

    // 2. HVP vs finite differences of the gradient; linearity and symmetry
    double hvp_err = 0.0, lin_err = 0.0, sym_err = 0.0;
    for (const Instance& inst : instances) {
        const int k = inst.model.W.rows, d = inst.model.W.cols;
        const DenseMat v1 = oracle::random_dense(rng, k, d, 1.0);
        const DenseMat v2 = oracle::random_dense(rng, k, d, 1.0);
        const DenseMat hv1 = hvp(inst.model, inst.X, v1);
        const DenseMat hv2 = hvp(inst.model, inst.X, v2);
        const DenseMat fd = oracle::fd_hvp(inst.model, inst.X, inst.y, v1, 1e-5);
        hvp_err = std::max(hvp_err, oracle::max_abs_diff(hv1.v, fd.v));

        const double a = 0.7, b = -1.3;
        DenseMat combo(k, d), expect(k, d);
        for (std::size_t i = 0; i < combo.v.size(); ++i) {
            combo.v[i] = a * v1.v[i] + b * v2.v[i];
            expect.v[i] = a * hv1.v[i] + b * hv2.v[i];
        }
        const DenseMat hc = hvp(inst.model, inst.X, combo);
        lin_err = std::max(lin_err, oracle::max_abs_diff(hc.v, expect.v));
        sym_err = std::max(sym_err, std::abs(dot(v2.v, hv1.v) - dot(v1.v, hv2.v)));
    }
    criterion(2, "hvp matches differentiated gradients, linear and symmetric",
              hvp_err <= 1e-5 && lin_err <= 1e-10 && sym_err <= 1e-10,
              fmt("fd err %.2e, linearity %.2e, symmetry %.2e", hvp_err, lin_err, sym_err));

    // 3. CG downweight vs an explicitly assembled dense-Hessian solve
    double dense_gap = 0.0;
    for (const auto& [k, d, n] : std::vector<std::array<int, 3>>{{3, 5, 40}, {4, 6, 60}, {2, 8, 30}}) {
        const CsrMatrix x = oracle::random_csr(rng, n, d, 0.6, 1.0);
        std::vector<int> y = oracle::random_labels(rng, n, k);
        TrainConfig tc;
        tc.C = 10.0;
        tc.grad_tol = 1e-7;
        const ModelParams model = train(x, y, k, tc);

        const int c = 1;
        const auto [updated, upd] = hessian_downweight(model, x, y, c, 1e-6, 400);

        std::vector<int> rows_c;
        for (int i = 0; i < n; ++i) {
            if (y[i] == c) rows_c.push_back(i);
        }
        const CsrMatrix xc = x.select_rows(rows_c);
        const DenseMat g = class_gradient(model, xc, c);
        const std::vector<double> h = oracle::dense_hessian(model, x);
        const std::vector<double> delta_dense = oracle::solve_dense(h, g.v);
        dense_gap = std::max(dense_gap, oracle::max_abs_diff(upd.delta.v, delta_dense));
        (void)updated;
    }
    criterion(3, "cg downweight matches the dense-Hessian direct solve", dense_gap <= 1e-3,
              fmt("max gap %.2e over 3 systems (K*d <= 60), tol 1e-03", dense_gap));

    // 4. exactness on ridge quadratics: the update lands on the retained optimum
    double quad_err = 0.0;
    bool quad_converged = true;
    for (const int m : {8, 14}) {
        std::vector<double> a_ret(m * m, 0.0), a_del(m * m, 0.0);
        const DenseMat r = oracle::random_dense(rng, m, m, 1.0);
        const DenseMat s = oracle::random_dense(rng, m, m, 0.6);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                double sr = 0.0, ss = 0.0;
                for (int t = 0; t < m; ++t) {
                    sr += r.at(t, i) * r.at(t, j);
                    ss += s.at(t, i) * s.at(t, j);
                }
                a_ret[i * m + j] = sr + (i == j ? 1.0 : 0.0);
                a_del[i * m + j] = ss + (i == j ? 0.5 : 0.0);
            }
        }
        std::vector<double> b_ret(m), b_del(m), a_full(m * m), b_full(m);
        for (int i = 0; i < m; ++i) {
            b_ret[i] = rng.normal();
            b_del[i] = rng.normal();
            b_full[i] = b_ret[i] + b_del[i];
        }
        for (int i = 0; i < m * m; ++i) a_full[i] = a_ret[i] + a_del[i];

        const std::vector<double> w_star = oracle::solve_dense(a_full, b_full);
        const std::vector<double> w_ret = oracle::solve_dense(a_ret, b_ret);
        std::vector<double> g(m, 0.0);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) g[i] += a_del[i * m + j] * w_star[j];
            g[i] -= b_del[i];
        }
        const LinOp op = [&](std::span<const double> in, std::span<double> out) {
            for (int i = 0; i < m; ++i) {
                double sum = 0.0;
                for (int j = 0; j < m; ++j) sum += a_ret[i * m + j] * in[j];
                out[i] = sum;
            }
        };
        CgResult stats;
        const std::vector<double> w_prime = apply_downweight(w_star, op, g, 1e-12, 500, &stats);
        quad_err = std::max(quad_err, oracle::max_abs_diff(w_prime, w_ret));
        quad_converged = quad_converged && stats.converged;
    }
    criterion(4, "quadratic fixture downweight hits the exact retained optimum",
              quad_err <= 1e-7 && quad_converged, fmt("max err %.2e, tol 1e-07", quad_err));

    // 5. deleting a class with zero training documents changes nothing
    {
        const int n = 60, d = 6, k = 3;
        const CsrMatrix x = oracle::random_csr(rng, n, d, 0.5, 1.0);
        const std::vector<int> y = oracle::random_labels(rng, n, k);
        TrainConfig tc;
        const ModelParams trained = train(x, y, k, tc);
        ModelParams wide;
        wide.lambda = trained.lambda;
        wide.W = DenseMat(k + 1, d);
        std::copy(trained.W.v.begin(), trained.W.v.end(), wide.W.v.begin());

        const auto [updated, upd] = hessian_downweight(wide, x, y, k, 1e-4, 200);
        const bool noop = updated.W.v == wide.W.v && upd.cg.iterations == 0 &&
                          upd.class_gradient_norm == 0.0;
        criterion(5, "empty-class deletion is a bit-exact no-op", noop,
                  noop ? "W unchanged, 0 CG iterations" : "model or diagnostics changed");
    }
}

// ---- property suites -----------------------------------------------------

void run_property_suites() {
    // conjugate gradients on random SPD systems
    {
        Rng rng(77);
        bool all_ok = true;
        double worst_rel = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const int m = 2 + static_cast<int>(rng.uniform_index(39));
            const DenseMat r = oracle::random_dense(rng, m, m, 1.0);
            std::vector<double> a(m * m, 0.0);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) {
                    double s = 0.0;
                    for (int t = 0; t < m; ++t) s += r.at(t, i) * r.at(t, j);
                    a[i * m + j] = s + (i == j ? 1.0 : 0.0);
                }
            }
            std::vector<double> b(m);
            for (double& v : b) v = rng.normal();
            const LinOp op = [&](std::span<const double> in, std::span<double> out) {
                for (int i = 0; i < m; ++i) {
                    double sum = 0.0;
                    for (int j = 0; j < m; ++j) sum += a[i * m + j] * in[j];
                    out[i] = sum;
                }
            };
            const CgResult res = cg_solve(op, b, 1e-8, 200);
            std::vector<double> ax(m, 0.0);
            op(res.x, ax);
            axpy(-1.0, b, ax);
            const double rel = norm2(ax) / norm2(b);
            worst_rel = std::max(worst_rel, rel);
            all_ok = all_ok && res.converged && rel <= 1e-6;
        }
        property("CG converges on random SPD systems", all_ok,
                 fmt("20 systems up to m=40, worst true residual %.2e", worst_rel));
    }

    // ROC-AUC equals exhaustive pair counting on every small input
    {
        const double alphabet[3] = {0.1, 0.5, 0.9};
        double worst = 0.0;
        long cases = 0;
        for (int n = 2; n <= 6; ++n) {
            std::vector<double> scores(n);
            std::vector<std::uint8_t> labels(n);
            long combos = 1;
            for (int i = 0; i < n; ++i) combos *= 3;
            for (int mask = 1; mask < (1 << n) - 1; ++mask) {
                for (int i = 0; i < n; ++i) labels[i] = (mask >> i) & 1;
                for (long code = 0; code < combos; ++code) {
                    long rest = code;
                    for (int i = 0; i < n; ++i) {
                        scores[i] = alphabet[rest % 3];
                        rest /= 3;
                    }
                    const double fast = roc_auc(scores, labels);
                    const double slow = oracle::exhaustive_auc(scores, labels);
                    worst = std::max(worst, std::abs(fast - slow));
                    ++cases;
                }
            }
        }
        property("ROC-AUC equals exhaustive pair counting through n=6", worst <= 1e-12,
                 fmt("%.0f cases, worst gap %.2e", static_cast<double>(cases), worst));
    }

    // KS statistic vs a brute-force ECDF sweep on tie-heavy samples
    {
        Rng rng(99);
        double worst = 0.0;
        bool p_ok = true;
        for (int trial = 0; trial < 50; ++trial) {
            const int na = 1 + static_cast<int>(rng.uniform_index(120));
            const int nb = 1 + static_cast<int>(rng.uniform_index(120));
            std::vector<double> a(na), b(nb);
            for (double& v : a) v = std::floor(rng.uniform_real() * 6.0) / 6.0;
            for (double& v : b) v = std::floor(rng.uniform_real() * 6.0) / 6.0 + 0.05 * rng.normal();
            const KsResult res = ks_two_sample(a, b);
            worst = std::max(worst, std::abs(res.d - oracle::brute_force_ks_d(a, b)));
            p_ok = p_ok && res.p >= 0.0 && res.p <= 1.0;
        }
        property("KS statistic matches the brute-force ECDF sweep", worst <= 1e-15 && p_ok,
                 fmt("50 tie-heavy pairs, worst gap %.2e", worst));
    }

    // a vacuous AUC target needs no release noise
    {
        SynthConfig sc;
        sc.num_classes = 3;
        sc.docs_per_class = 70;
        sc.signature_pool = 10;
        sc.shared_pool = 15;
        sc.tail_pool = 30;
        sc.signature_draws = 5;
        sc.shared_draws = 5;
        sc.tail_draws = 2;
        sc.neighbor_mix = 0.2;
        const LabeledCorpus corpus = make_synthetic_corpus(sc, 9);
        std::vector<int> train_idx, test_idx;
        for (int i = 0; i < static_cast<int>(corpus.size()); ++i) {
            (i % 3 == 2 ? test_idx : train_idx).push_back(i);
        }
        const LabeledCorpus train_corpus = subset(corpus, train_idx);
        const LabeledCorpus test_corpus = subset(corpus, test_idx);
        PipelineConfig pc;
        pc.min_df = 1;
        TrainConfig tc;
        const std::vector<double> c_grid{10.0};
        const std::vector<double> tau_grid{1.0};
        const std::vector<double> sigma_grid{0.0, 0.8};
        const std::vector<SweepRow> rows =
            noise_sweep(train_corpus, test_corpus, pc, tc, 1, c_grid, tau_grid, sigma_grid, 2, 3);
        const bool ok = rows.size() == 1 && rows[0].found && rows[0].sigma_star == 0.0 &&
                        rows[0].acc_excluding > 0.0;
        property("noise sweep returns sigma*=0 for tau=1", ok,
                 ok ? fmt("sigma*=%.1f, acc_excluding %.3f", rows[0].sigma_star,
                          rows[0].acc_excluding)
                    : "unexpected sweep row");
    }
}

// ---- method-behavior suite -------------------------------------------------

struct SeedOutcome {
    double acc_h = 0.0, acc_g = 0.0, acc_r = 0.0;
    double agreement = 0.0;
    double ks_p = 0.0;
    double auc_pre = 0.0, auc_h = 0.0;
    double ret_shift = 0.0;
    bool have_auc = false;
};

void run_method_suite() {
    ExperimentConfig cfg = load_config(std::string(LETHE_REPO_ROOT) + "/lethe.toml", false);
    cfg.dataset = std::string(LETHE_DATA_DIR) + "/synth.jsonl";
    cfg.bench_repeats = 5;  // stabler medians than the demo default
    validate_config(cfg, true);

    const LabeledCorpus corpus = load_dataset(cfg);
    int c = -1;
    for (int k = 0; k < corpus.num_classes(); ++k) {
        if (corpus.label_names[k] == cfg.classes.front()) c = k;
    }
    if (c < 0) throw std::runtime_error("deletion class missing from the bundled corpus");

    const int num_seeds = static_cast<int>(cfg.seeds.size());
    std::vector<SeedOutcome> outs(num_seeds);
    parallel_for(num_seeds, cfg.workers, [&](int i) {
        const SeedContext ctx = build_seed_context(corpus, cfg, cfg.seeds[i]);
        const Release pre = build_release(ctx, cfg, Method::pre, c);
        const Release hes = build_release(ctx, cfg, Method::hessian, c);
        const Release gol = build_release(ctx, cfg, Method::golden, c);
        const Release rel = build_release(ctx, cfg, Method::relabel, c);

        SeedOutcome& out = outs[i];
        const UtilityMetrics mh = evaluate_release(ctx, hes, &gol, c);
        out.acc_h = mh.acc_excluding;
        out.agreement = mh.agreement;
        out.ks_p = mh.ks.p;
        out.acc_g = evaluate_release(ctx, gol, &gol, c).acc_excluding;
        out.acc_r = evaluate_release(ctx, rel, &gol, c).acc_excluding;

        const MiaReport ap = run_mia(ctx, cfg, pre, c);
        const MiaReport ah = run_mia(ctx, cfg, hes, c);
        out.have_auc = ap.has_target && ah.has_target && ap.has_retained && ah.has_retained;
        out.auc_pre = ap.auc_target;
        out.auc_h = ah.auc_target;
        out.ret_shift = std::abs(ap.auc_retained - ah.auc_retained);
    });

    std::vector<double> acc_h, acc_g, acc_r, agree, ks_p, auc_pre, auc_h, ret_shift;
    bool auc_complete = true;
    for (int i = 0; i < num_seeds; ++i) {
        const SeedOutcome& o = outs[i];
        std::printf("  seed %llu: acc_h=%.4f acc_g=%.4f acc_r=%.4f agree=%.3f ks_p=%.3f "
                    "auc_pre=%.3f auc_h=%.3f ret_shift=%.3f\n",
                    static_cast<unsigned long long>(cfg.seeds[i]), o.acc_h, o.acc_g, o.acc_r,
                    o.agreement, o.ks_p, o.auc_pre, o.auc_h, o.ret_shift);
        acc_h.push_back(o.acc_h);
        acc_g.push_back(o.acc_g);
        acc_r.push_back(o.acc_r);
        agree.push_back(o.agreement);
        ks_p.push_back(o.ks_p);
        auc_pre.push_back(o.auc_pre);
        auc_h.push_back(o.auc_h);
        ret_shift.push_back(o.ret_shift);
        auc_complete = auc_complete && o.have_auc;
    }

    const double gap_golden = std::abs(mean(acc_h) - mean(acc_g));
    const double gap_relabel = mean(acc_h) - mean(acc_r);
    criterion(6, "hessian keeps golden-level accuracy and beats relabeling",
              gap_golden <= 0.02 && gap_relabel >= 0.03,
              fmt("|acc_h-acc_g| %.4f <= 0.02, acc_h-acc_r %.4f >= 0.03 (5-seed means)",
                  gap_golden, gap_relabel));

    const double min_agree = *std::min_element(agree.begin(), agree.end());
    criterion(7, "deleted-class predictions agree with golden", min_agree >= 0.75,
              fmt("per-seed min %.3f >= 0.75, mean %.3f", min_agree, mean(agree)));

    const double min_ks = *std::min_element(ks_p.begin(), ks_p.end());
    criterion(8, "retained test margins are KS-stable across the downweight", min_ks >= 0.05,
              fmt("per-seed min p %.3f >= 0.05, mean %.3f", min_ks, mean(ks_p)));

    const double auc_drop = mean(auc_pre) - mean(auc_h);
    const double min_auc_h = *std::min_element(auc_h.begin(), auc_h.end());
    const double max_auc_h = *std::max_element(auc_h.begin(), auc_h.end());
    const bool band_ok = min_auc_h >= 0.43 && max_auc_h <= 0.57;
    char nine[200];
    std::snprintf(nine, sizeof(nine),
                  "drop %.4f >= 0.03, auc_h in [%.3f, %.3f], mean ret shift %.4f <= 0.05",
                  auc_drop, min_auc_h, max_auc_h, mean(ret_shift));
    criterion(9, "attack AUC falls to the chance band and retained AUC barely moves",
              auc_complete && auc_drop >= 0.03 && band_ok && mean(ret_shift) <= 0.05, nine);

    const SeedContext bench_ctx = build_seed_context(corpus, cfg, cfg.seeds.front());
    const BenchResult bench = run_bench(bench_ctx, cfg, c, cfg.bench_repeats);
    criterion(10, "downweight runs at least 3x faster than retraining",
              bench.hessian_median * 3.0 <= bench.golden_median,
              fmt("medians: downweight %.4fs, retrain %.4fs, speedup %.1fx", bench.hessian_median,
                  bench.golden_median, bench.speedup));
}

}  // namespace

int main() {
    try {
        std::printf("== numerical-correctness suite ==\n");
        const auto t0 = std::chrono::steady_clock::now();
        run_numerical_suite();
        const double numerical_s = now_minus(t0);
        budget("numerical suite budget", numerical_s, 60.0);

        std::printf("== property suites ==\n");
        run_property_suites();

        std::printf("== method-behavior suite (bundled 4-class corpus) ==\n");
        const auto t1 = std::chrono::steady_clock::now();
        run_method_suite();
        budget("method suite budget", now_minus(t1), 300.0);
    } catch (const std::exception& e) {
        std::printf("[FAIL] fatal: %s\n", e.what());
        return 1;
    }

    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance check(s) failed\n", g_failures);
    return 1;
}
