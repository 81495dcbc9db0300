#include "lethe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace lethe {

LabeledCorpus load_dataset(const ExperimentConfig& config) {
    if (config.format == "csv") return load_csv(config.dataset);
    return load_jsonl(config.dataset);
}

LabeledCorpus subset(const LabeledCorpus& corpus, std::span<const int> indices) {
    LabeledCorpus out;
    out.label_names = corpus.label_names;
    out.docs.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (int idx : indices) {
        out.docs.push_back(corpus.docs[idx]);
        out.labels.push_back(corpus.labels[idx]);
    }
    return out;
}

namespace {

void fill_context_tail(SeedContext& ctx) {
    ctx.X_train = transform(ctx.vocab, ctx.train_corpus.docs);
    ctx.X_val = transform(ctx.vocab, ctx.val_corpus.docs);
    ctx.X_test = transform(ctx.vocab, ctx.test_corpus.docs);
}

}  // namespace

SeedContext build_seed_context(const LabeledCorpus& corpus, const ExperimentConfig& config,
                               std::uint64_t seed) {
    SeedContext ctx;
    ctx.seed = seed;
    ctx.split = split_train_test(corpus, config.test_fraction, config.val_fraction, seed);
    ctx.train_corpus = subset(corpus, ctx.split.train);
    ctx.val_corpus = subset(corpus, ctx.split.val);
    ctx.test_corpus = subset(corpus, ctx.split.test);
    ctx.vocab = fit_vocabulary(ctx.train_corpus.docs, config.pipeline);
    fill_context_tail(ctx);
    ctx.model = train(ctx.X_train, ctx.train_corpus.labels, corpus.num_classes(), config.train);
    return ctx;
}

SeedContext load_seed_context(const LabeledCorpus& corpus, const ExperimentConfig& config,
                              std::uint64_t seed, const std::string& base_dir,
                              const std::string& dataset_hash) {
    SeedContext ctx;
    ctx.seed = seed;
    const SplitArtifact split = load_split(base_dir + "/split.json");
    if (split.dataset_hash != dataset_hash) {
        throw std::runtime_error(base_dir + "/split.json: dataset has changed since `train` ran");
    }
    if (split.seed != seed) {
        throw std::runtime_error(base_dir + "/split.json: seed mismatch");
    }
    ctx.split = split.split;
    for (int idx : ctx.split.train) {
        if (idx < 0 || idx >= corpus.size()) {
            throw std::runtime_error(base_dir + "/split.json: index out of range");
        }
    }
    ctx.train_corpus = subset(corpus, ctx.split.train);
    ctx.val_corpus = subset(corpus, ctx.split.val);
    ctx.test_corpus = subset(corpus, ctx.split.test);
    ctx.vocab = load_vocabulary(base_dir + "/vocab.json");
    fill_context_tail(ctx);
    std::string vocab_hash;
    ctx.model = load_model(base_dir + "/model.json", &vocab_hash);
    const std::string expected = file_hash(base_dir + "/vocab.json");
    if (!vocab_hash.empty() && vocab_hash != expected) {
        throw std::runtime_error(base_dir + "/model.json: vocabulary hash mismatch");
    }
    if (ctx.model.dim() != ctx.vocab.dim()) {
        throw std::runtime_error(base_dir + "/model.json: dimension disagrees with vocabulary");
    }
    return ctx;
}

Release build_release(const SeedContext& ctx, const ExperimentConfig& config, Method method,
                      int c) {
    return make_release(method, ctx.model, ctx.X_train, ctx.train_corpus.labels, c, config.train,
                        ctx.seed + seed_offset::kRelabel, config.cg_tol, config.cg_max_iter);
}

MarginSets collect_margins(const SeedContext& ctx, const Release& release, int c) {
    MarginSets sets;
    const auto& y = ctx.test_corpus.labels;
    const int k = ctx.model.num_classes();

    const DenseMat pre = probs(scores(ctx.model, ctx.X_test), nullptr);
    const DenseMat post = release.probs_full(ctx.X_test);
    const ActiveMask pre_active(k, 1);
    const ActiveMask post_active = release.active();

    PredictionVector pv;
    for (int i = 0; i < ctx.X_test.rows; ++i) {
        if (y[i] != c) {
            pv.active = pre_active;
            const auto row = pre.row(i);
            pv.probs.assign(row.begin(), row.end());
            sets.pre_true.push_back(margin(pv, y[i]));

            pv.active = post_active;
            const auto prow = post.row(i);
            pv.probs.assign(prow.begin(), prow.end());
            sets.post_true.push_back(margin(pv, y[i]));
        } else {
            const int r = next_top1(ctx.model, ctx.X_test.row(i), c);
            pv.active = post_active;
            const auto prow = post.row(i);
            pv.probs.assign(prow.begin(), prow.end());
            sets.post_reassigned.push_back(margin(pv, r));
        }
    }
    return sets;
}

UtilityMetrics evaluate_release(const SeedContext& ctx, const Release& release,
                                const Release* golden, int c) {
    UtilityMetrics out;
    const auto& y = ctx.test_corpus.labels;

    out.pre_acc_all = accuracy(ctx.model, ctx.X_test, y, nullptr);
    {
        const DenseMat s = scores(ctx.model, ctx.X_test);
        int hits = 0, eligible = 0;
        for (int i = 0; i < ctx.X_test.rows; ++i) {
            if (y[i] == c) continue;
            ++eligible;
            if (argmax_active(s.row(i), nullptr) == y[i]) ++hits;
        }
        if (eligible == 0) throw std::runtime_error("evaluate_release: no retained test docs");
        out.pre_acc_retained = static_cast<double>(hits) / eligible;
    }

    {
        const DenseMat p = release.probs_full(ctx.X_test);
        const ActiveMask active = release.active();
        int hits = 0, eligible = 0;
        for (int i = 0; i < ctx.X_test.rows; ++i) {
            if (y[i] == c) continue;
            ++eligible;
            if (argmax_active(p.row(i), &active) == y[i]) ++hits;
        }
        out.acc_excluding = static_cast<double>(hits) / eligible;
    }

    if (golden) {
        std::vector<int> deleted;
        for (int i = 0; i < ctx.X_test.rows; ++i) {
            if (y[i] == c) deleted.push_back(i);
        }
        if (!deleted.empty()) {
            const CsrMatrix X_c = ctx.X_test.select_rows(deleted);
            const DenseMat p_ours = release.probs_full(X_c);
            const DenseMat p_gold = golden->probs_full(X_c);
            const ActiveMask a_ours = release.active();
            const ActiveMask a_gold = golden->active();
            int agree = 0;
            for (int i = 0; i < X_c.rows; ++i) {
                if (argmax_active(p_ours.row(i), &a_ours) == argmax_active(p_gold.row(i), &a_gold)) {
                    ++agree;
                }
            }
            out.agreement = static_cast<double>(agree) / X_c.rows;
            out.has_agreement = true;
        }
    }

    const MarginSets margins = collect_margins(ctx, release, c);
    out.ks = ks_two_sample(margins.pre_true, margins.post_true);
    return out;
}

MiaReport run_mia(const SeedContext& ctx, const ExperimentConfig& config, const Release& target,
                  int c) {
    const ShadowPool pool = build_shadow_pool(
        ctx.train_corpus, config.pipeline, config.train, target.method, c, config.shadows,
        ctx.seed + seed_offset::kShadowBase, config.cg_tol, config.cg_max_iter);
    const Attacker attacker = train_attacker(pool.features, pool.member, config.attacker_C);

    const ActiveMask active = target.active();
    const DenseMat f_member = features_from_probs(target.probs_full(ctx.X_train), active);
    const DenseMat f_nonmember = features_from_probs(target.probs_full(ctx.X_test), active);
    return evaluate_target(attacker, f_member, ctx.train_corpus.labels, f_nonmember,
                           ctx.test_corpus.labels, c);
}

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

BenchResult run_bench(const SeedContext& ctx, const ExperimentConfig& config, int c,
                      int repeats) {
    BenchResult out;
    const auto& y = ctx.train_corpus.labels;
    const int k = ctx.model.num_classes();

    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        auto [updated, upd] =
            hessian_downweight(ctx.model, ctx.X_train, y, c, config.cg_tol, config.cg_max_iter);
        zero_class(updated, c);
        const auto t1 = std::chrono::steady_clock::now();
        out.hessian_times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<int> keep;
        for (int i = 0; i < ctx.X_train.rows; ++i) {
            if (y[i] != c) keep.push_back(i);
        }
        const CsrMatrix X_ret = ctx.X_train.select_rows(keep);
        std::vector<int> y_ret(keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) y_ret[i] = y[keep[i]];
        golden_retrain(X_ret, y_ret, c, k, config.train);
        const auto t1 = std::chrono::steady_clock::now();
        out.golden_times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    out.hessian_median = median(out.hessian_times);
    out.golden_median = median(out.golden_times);
    out.speedup = out.golden_median / out.hessian_median;
    return out;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    int n = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    n = std::min(n, count);
    if (n == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::string first_error;
    bool failed = false;

    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed) {
                    failed = true;
                    first_error = e.what();
                }
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(n);
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed) throw std::runtime_error(first_error);
}

}  // namespace lethe
