// Command-line driver: train, unlearn, retrain, evaluate, mia, sweep,
// bench, report. Configuration comes from a TOML file plus flag overrides
// (flags win); the LETHE_CONFIG environment variable overrides the default
// config path only. Exit codes: 0 success, 1 validation error, 2 runtime
// failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lethe/experiment.hpp"
#include "lethe/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::mutex g_print_mutex;

void say(const std::string& line) {
    std::lock_guard<std::mutex> lock(g_print_mutex);
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// ---- config resolution -----------------------------------------------

struct CommonArgs {
    std::string config_path;
    std::string dataset;
    std::string format;
    std::string output_dir;
    std::vector<std::string> classes;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    int workers = -1;
    int shadows = -1;

    CLI::Option* opt_dataset = nullptr;
    CLI::Option* opt_format = nullptr;
    CLI::Option* opt_output = nullptr;
    CLI::Option* opt_classes = nullptr;
    CLI::Option* opt_methods = nullptr;
    CLI::Option* opt_seeds = nullptr;
    CLI::Option* opt_workers = nullptr;
    CLI::Option* opt_shadows = nullptr;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config_path, "config file (TOML); LETHE_CONFIG overrides the default path");
    a.opt_dataset = sub->add_option("--dataset", a.dataset, "dataset path (overrides config)");
    a.opt_format = sub->add_option("--format", a.format, "dataset format: jsonl or csv");
    a.opt_output = sub->add_option("--output-dir", a.output_dir, "output directory");
    a.opt_classes = sub->add_option("--classes", a.classes, "deletion target class names")->delimiter(',');
    a.opt_methods = sub->add_option("--methods", a.methods, "methods: hessian, golden, random_relabel")->delimiter(',');
    a.opt_seeds = sub->add_option("--seeds", a.seeds, "seed list")->delimiter(',');
    a.opt_workers = sub->add_option("--workers", a.workers, "worker threads (0 = hardware)");
    a.opt_shadows = sub->add_option("--shadows", a.shadows, "shadow model count");
}

lethe::ExperimentConfig resolve_config(const CommonArgs& a, bool check_dataset) {
    std::string path = a.config_path;
    if (path.empty()) {
        const char* env = std::getenv("LETHE_CONFIG");
        path = env && *env ? env : "lethe.toml";
    }
    lethe::ExperimentConfig cfg = lethe::load_config(path, false);

    if (a.opt_dataset->count()) cfg.dataset = a.dataset;
    if (a.opt_format->count()) cfg.format = a.format;
    if (a.opt_output->count()) cfg.output_dir = a.output_dir;
    if (a.opt_classes->count()) cfg.classes = a.classes;
    if (a.opt_seeds->count()) cfg.seeds = a.seeds;
    if (a.opt_workers->count()) cfg.workers = a.workers;
    if (a.opt_shadows->count()) cfg.shadows = a.shadows;
    if (a.opt_methods->count()) {
        cfg.methods.clear();
        for (const auto& name : a.methods) {
            lethe::Method m;
            if (!lethe::parse_method(name, &m) || m == lethe::Method::pre) {
                throw lethe::ConfigError("invalid configuration:\n  methods: unknown method `" +
                                         name + "` (valid: hessian, golden, random_relabel)");
            }
            cfg.methods.push_back(m);
        }
    }

    lethe::validate_config(cfg, check_dataset);
    return cfg;
}

// ---- paths -------------------------------------------------------------

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        out += ok ? c : '_';
    }
    return out.empty() ? std::string("_") : out;
}

std::string dataset_stem(const std::string& path) {
    const std::string stem = fs::path(path).stem().string();
    return stem.empty() ? std::string("dataset") : sanitize(stem);
}

struct Layout {
    fs::path root;  // <output_dir>/<dataset_stem>

    fs::path base_dir(std::uint64_t seed) const { return root / "base" / std::to_string(seed); }
    fs::path cell_dir(const std::string& condition, const std::string& cls,
                      std::uint64_t seed) const {
        return root / condition / sanitize(cls) / std::to_string(seed);
    }
};

Layout layout_for(const lethe::ExperimentConfig& cfg) {
    return Layout{fs::path(cfg.output_dir) / dataset_stem(cfg.dataset)};
}

// ---- shared lookups ------------------------------------------------------

std::vector<int> resolve_classes(const lethe::ExperimentConfig& cfg,
                                 const lethe::LabeledCorpus& corpus) {
    if (cfg.classes.empty()) {
        throw lethe::ConfigError(
            "invalid configuration:\n  classes: at least one deletion target required");
    }
    std::vector<int> ids;
    for (const auto& name : cfg.classes) {
        int id = -1;
        for (int k = 0; k < corpus.num_classes(); ++k) {
            if (corpus.label_names[k] == name) {
                id = k;
                break;
            }
        }
        if (id < 0) {
            std::string valid;
            for (const auto& n : corpus.label_names) {
                if (!valid.empty()) valid += ", ";
                valid += n;
            }
            throw lethe::ConfigError("invalid configuration:\n  classes: unknown class name `" +
                                     name + "` (valid: " + valid + ")");
        }
        ids.push_back(id);
    }
    return ids;
}

lethe::SeedContext load_context_or_explain(const lethe::LabeledCorpus& corpus,
                                           const lethe::ExperimentConfig& cfg, const Layout& lay,
                                           std::uint64_t seed, const std::string& dataset_hash) {
    const fs::path base = lay.base_dir(seed);
    if (!fs::exists(base / "model.json")) {
        throw std::runtime_error("missing trained artifacts at " + base.string() +
                                 "; run `lethe train` first");
    }
    return lethe::load_seed_context(corpus, cfg, seed, base.string(), dataset_hash);
}

json provenance(const lethe::ExperimentConfig& cfg, const std::string& dataset_hash,
                const std::map<std::string, std::string>& inputs) {
    json p;
    p["config_hash"] = lethe::fnv1a_hex(lethe::canonical_config_json(cfg));
    p["dataset_hash"] = dataset_hash;
    for (const auto& [name, hash] : inputs) p[name] = hash;
    return p;
}

// ---- commands ----------------------------------------------------------

int cmd_train(const CommonArgs& args) {
    const lethe::ExperimentConfig cfg = resolve_config(args, true);
    const lethe::LabeledCorpus corpus = lethe::load_dataset(cfg);
    const std::string dataset_hash = lethe::file_hash(cfg.dataset);
    const Layout lay = layout_for(cfg);

    lethe::parallel_for(static_cast<int>(cfg.seeds.size()), cfg.workers, [&](int i) {
        const std::uint64_t seed = cfg.seeds[i];
        const lethe::SeedContext ctx = lethe::build_seed_context(corpus, cfg, seed);
        const fs::path base = lay.base_dir(seed);
        fs::create_directories(base);
        lethe::save_vocabulary(ctx.vocab, (base / "vocab.json").string());
        const std::string vocab_hash = lethe::file_hash((base / "vocab.json").string());
        lethe::save_model(ctx.model, (base / "model.json").string(), vocab_hash);
        lethe::SplitArtifact split{ctx.split, seed, cfg.test_fraction, cfg.val_fraction,
                                   dataset_hash};
        lethe::save_split(split, (base / "split.json").string());

        const bool use_val = !ctx.val_corpus.docs.empty();
        const double acc = use_val
                               ? lethe::accuracy(ctx.model, ctx.X_val, ctx.val_corpus.labels)
                               : lethe::accuracy(ctx.model, ctx.X_test, ctx.test_corpus.labels);
        say("train seed=" + std::to_string(seed) + ": held-out accuracy " + fmt(acc) + " (" +
            (use_val ? "val" : "test") + ", " + std::to_string(ctx.X_train.rows) +
            " training docs, " + std::to_string(ctx.vocab.dim()) + " features)");
    });
    return 0;
}

int run_unlearn(const CommonArgs& args, const std::vector<lethe::Method>& methods_override) {
    lethe::ExperimentConfig cfg = resolve_config(args, true);
    if (!methods_override.empty()) cfg.methods = methods_override;
    const lethe::LabeledCorpus corpus = lethe::load_dataset(cfg);
    const std::string dataset_hash = lethe::file_hash(cfg.dataset);
    const std::vector<int> classes = resolve_classes(cfg, corpus);
    const Layout lay = layout_for(cfg);

    lethe::parallel_for(static_cast<int>(cfg.seeds.size()), cfg.workers, [&](int i) {
        const std::uint64_t seed = cfg.seeds[i];
        const lethe::SeedContext ctx =
            load_context_or_explain(corpus, cfg, lay, seed, dataset_hash);
        const std::string vocab_hash =
            lethe::file_hash((lay.base_dir(seed) / "vocab.json").string());
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            const int c = classes[ci];
            const std::string& cls = cfg.classes[ci];
            for (const lethe::Method m : cfg.methods) {
                const lethe::Release rel = lethe::build_release(ctx, cfg, m, c);
                const fs::path dir = lay.cell_dir(lethe::method_name(m), cls, seed);
                fs::create_directories(dir);
                lethe::save_release(rel, (dir / "released.json").string(), vocab_hash);
                std::string note;
                if (rel.has_update) {
                    lethe::save_update_log(rel.update, (dir / "update.json").string());
                    note = " (cg iterations=" + std::to_string(rel.update.cg.iterations) +
                           ", residual=" + fmt(rel.update.cg.residual_norm) +
                           ", wall=" + fmt(rel.update.wall_time) + "s)";
                }
                say(std::string("unlearn method=") + lethe::method_name(m) + " class=" + cls +
                    " seed=" + std::to_string(seed) + ": released" + note);
            }
        }
    });
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    const lethe::ExperimentConfig cfg = resolve_config(args, true);
    const lethe::LabeledCorpus corpus = lethe::load_dataset(cfg);
    const std::string dataset_hash = lethe::file_hash(cfg.dataset);
    const std::vector<int> classes = resolve_classes(cfg, corpus);
    const Layout lay = layout_for(cfg);

    lethe::parallel_for(static_cast<int>(cfg.seeds.size()), cfg.workers, [&](int i) {
        const std::uint64_t seed = cfg.seeds[i];
        const lethe::SeedContext ctx =
            load_context_or_explain(corpus, cfg, lay, seed, dataset_hash);
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            const int c = classes[ci];
            const std::string& cls = cfg.classes[ci];

            const fs::path golden_path =
                lay.cell_dir("golden", cls, seed) / "released.json";
            if (!fs::exists(golden_path)) {
                throw std::runtime_error("missing golden model at " + golden_path.string() +
                                         "; run `lethe retrain` (or `lethe unlearn --methods "
                                         "golden`) first");
            }
            const lethe::Release golden = lethe::load_release(golden_path.string());

            for (const lethe::Method m : cfg.methods) {
                const fs::path dir = lay.cell_dir(lethe::method_name(m), cls, seed);
                const fs::path released_path = dir / "released.json";
                if (!fs::exists(released_path)) {
                    throw std::runtime_error("missing released model at " +
                                             released_path.string() +
                                             "; run `lethe unlearn` first");
                }
                const lethe::Release rel = lethe::load_release(released_path.string());
                const lethe::UtilityMetrics um = lethe::evaluate_release(ctx, rel, &golden, c);
                const lethe::MarginSets margins = lethe::collect_margins(ctx, rel, c);

                json j;
                j["format"] = "lethe-metrics";
                j["version"] = 1;
                j["dataset"] = dataset_stem(cfg.dataset);
                j["method"] = lethe::method_name(m);
                j["class"] = cls;
                j["seed"] = seed;
                j["acc_excluding"] = um.acc_excluding;
                if (um.has_agreement) j["agreement"] = um.agreement;
                j["pre_acc_all"] = um.pre_acc_all;
                j["pre_acc_retained"] = um.pre_acc_retained;
                j["ks_d"] = um.ks.d;
                j["ks_p"] = um.ks.p;
                j["provenance"] = provenance(
                    cfg, dataset_hash,
                    {{"released_hash", lethe::file_hash(released_path.string())},
                     {"golden_hash", lethe::file_hash(golden_path.string())},
                     {"model_hash",
                      lethe::file_hash((lay.base_dir(seed) / "model.json").string())}});
                lethe::write_text_file((dir / "metrics.json").string(), j.dump(2) + "\n");

                // Margin histogram export, fixed 0.05 bins over [-1, 1].
                std::string csv = "stage,reference,bin_lo,bin_hi,count\n";
                const auto emit = [&csv](const char* stage, const char* ref,
                                         const std::vector<double>& vals) {
                    constexpr int kBins = 40;
                    std::vector<int> counts(kBins, 0);
                    for (double v : vals) {
                        int b = static_cast<int>((v + 1.0) / 0.05);
                        if (b < 0) b = 0;
                        if (b >= kBins) b = kBins - 1;
                        ++counts[b];
                    }
                    for (int b = 0; b < kBins; ++b) {
                        const double lo = -1.0 + 0.05 * b;
                        csv += std::string(stage) + "," + ref + "," + fmt(lo) + "," +
                               fmt(lo + 0.05) + "," + std::to_string(counts[b]) + "\n";
                    }
                };
                emit("pre", "true", margins.pre_true);
                emit("post", "true", margins.post_true);
                emit("post", "next_top1", margins.post_reassigned);
                lethe::write_text_file((dir / "margins.csv").string(), csv);

                say("evaluate method=" + std::string(lethe::method_name(m)) + " class=" + cls +
                    " seed=" + std::to_string(seed) + ": acc_excluding=" + fmt(um.acc_excluding) +
                    (um.has_agreement ? " agreement=" + fmt(um.agreement) : std::string()) +
                    " ks_p=" + fmt(um.ks.p));
            }
        }
    });
    return 0;
}

int cmd_mia(const CommonArgs& args) {
    const lethe::ExperimentConfig cfg = resolve_config(args, true);
    const lethe::LabeledCorpus corpus = lethe::load_dataset(cfg);
    const std::string dataset_hash = lethe::file_hash(cfg.dataset);
    const std::vector<int> classes = resolve_classes(cfg, corpus);
    const Layout lay = layout_for(cfg);

    lethe::parallel_for(static_cast<int>(cfg.seeds.size()), cfg.workers, [&](int i) {
        const std::uint64_t seed = cfg.seeds[i];
        const lethe::SeedContext ctx =
            load_context_or_explain(corpus, cfg, lay, seed, dataset_hash);
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            const int c = classes[ci];
            const std::string& cls = cfg.classes[ci];

            std::vector<lethe::Method> conditions{lethe::Method::pre};
            conditions.insert(conditions.end(), cfg.methods.begin(), cfg.methods.end());
            for (const lethe::Method m : conditions) {
                lethe::Release rel;
                std::map<std::string, std::string> inputs;
                if (m == lethe::Method::pre) {
                    rel = lethe::build_release(ctx, cfg, m, c);
                    inputs["model_hash"] =
                        lethe::file_hash((lay.base_dir(seed) / "model.json").string());
                } else {
                    const fs::path released_path =
                        lay.cell_dir(lethe::method_name(m), cls, seed) / "released.json";
                    if (!fs::exists(released_path)) {
                        throw std::runtime_error("missing released model at " +
                                                 released_path.string() +
                                                 "; run `lethe unlearn` first");
                    }
                    rel = lethe::load_release(released_path.string());
                    inputs["released_hash"] = lethe::file_hash(released_path.string());
                }
                const lethe::MiaReport rep = lethe::run_mia(ctx, cfg, rel, c);

                const fs::path dir = lay.cell_dir(lethe::method_name(m), cls, seed);
                fs::create_directories(dir);
                json j;
                j["format"] = "lethe-mia";
                j["version"] = 1;
                j["dataset"] = dataset_stem(cfg.dataset);
                j["method"] = lethe::method_name(m);
                j["class"] = cls;
                j["seed"] = seed;
                j["shadows"] = cfg.shadows;
                if (rep.has_retained) j["auc_retained"] = rep.auc_retained;
                if (rep.has_target) j["auc_target"] = rep.auc_target;
                j["n_retained"] = rep.n_retained;
                j["n_target"] = rep.n_target;
                j["n_retained_members"] = rep.n_retained_members;
                j["n_target_members"] = rep.n_target_members;
                j["attacker_coefficients"] = rep.coefficients;
                j["provenance"] = provenance(cfg, dataset_hash, inputs);
                lethe::write_text_file((dir / "mia.json").string(), j.dump(2) + "\n");

                say("mia method=" + std::string(lethe::method_name(m)) + " class=" + cls +
                    " seed=" + std::to_string(seed) + ": auc_ret=" +
                    (rep.has_retained ? fmt(rep.auc_retained) : std::string("n/a")) +
                    " auc_c=" + (rep.has_target ? fmt(rep.auc_target) : std::string("n/a")));
            }
        }
    });
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    const lethe::ExperimentConfig cfg = resolve_config(args, true);
    const lethe::LabeledCorpus corpus = lethe::load_dataset(cfg);
    const std::string dataset_hash = lethe::file_hash(cfg.dataset);
    const std::vector<int> classes = resolve_classes(cfg, corpus);
    const Layout lay = layout_for(cfg);
    const std::uint64_t seed = cfg.seeds.front();
    const std::vector<double> sigma_grid =
        cfg.sigma_grid.empty() ? lethe::default_sigma_grid() : cfg.sigma_grid;

    const lethe::TrainTestSplit split =
        lethe::split_train_test(corpus, cfg.test_fraction, cfg.val_fraction, seed);
    const lethe::LabeledCorpus train_corpus = lethe::subset(corpus, split.train);
    const lethe::LabeledCorpus test_corpus = lethe::subset(corpus, split.test);

    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        const int c = classes[ci];
        const std::string& cls = cfg.classes[ci];
        const std::vector<lethe::SweepRow> rows = lethe::noise_sweep(
            train_corpus, test_corpus, cfg.pipeline, cfg.train, c, cfg.c_grid, cfg.tau_grid,
            sigma_grid, cfg.shadows, seed, cfg.cg_tol, cfg.cg_max_iter);

        const fs::path dir = lay.root / "sweep" / sanitize(cls);
        fs::create_directories(dir);
        std::string csv = "C,tau,sigma_star,auc_retained,acc_excluding\n";
        json jrows = json::array();
        for (const auto& r : rows) {
            csv += fmt(r.C) + "," + fmt(r.tau) + ",";
            csv += r.found ? std::to_string(r.sigma_star) : std::string();
            csv += ",";
            csv += r.found ? fmt(r.auc_retained) : std::string();
            csv += ",";
            csv += r.found ? fmt(r.acc_excluding) : std::string();
            csv += "\n";
            json one;
            one["C"] = r.C;
            one["tau"] = r.tau;
            one["found"] = r.found;
            if (r.found) {
                one["sigma_star"] = r.sigma_star;
                one["auc_retained"] = r.auc_retained;
                one["acc_excluding"] = r.acc_excluding;
            }
            jrows.push_back(one);
        }
        lethe::write_text_file((dir / "sweep.csv").string(), csv);
        json j;
        j["format"] = "lethe-sweep";
        j["version"] = 1;
        j["class"] = cls;
        j["seed"] = seed;
        j["rows"] = jrows;
        j["provenance"] = provenance(cfg, dataset_hash, {});
        lethe::write_text_file((dir / "sweep.json").string(), j.dump(2) + "\n");
        say("sweep class=" + cls + ": " + std::to_string(rows.size()) + " rows -> " +
            (dir / "sweep.csv").string());
    }
    return 0;
}

int cmd_bench(const CommonArgs& args) {
    const lethe::ExperimentConfig cfg = resolve_config(args, true);
    const lethe::LabeledCorpus corpus = lethe::load_dataset(cfg);
    const std::string dataset_hash = lethe::file_hash(cfg.dataset);
    const std::vector<int> classes = resolve_classes(cfg, corpus);
    const Layout lay = layout_for(cfg);
    const std::uint64_t seed = cfg.seeds.front();
    const lethe::SeedContext ctx = load_context_or_explain(corpus, cfg, lay, seed, dataset_hash);

    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        const int c = classes[ci];
        const std::string& cls = cfg.classes[ci];
        const lethe::BenchResult res = lethe::run_bench(ctx, cfg, c, cfg.bench_repeats);
        const fs::path dir = lay.root / "bench" / sanitize(cls);
        fs::create_directories(dir);
        json j;
        j["format"] = "lethe-bench";
        j["version"] = 1;
        j["class"] = cls;
        j["seed"] = seed;
        j["repeats"] = cfg.bench_repeats;
        j["hessian_times"] = res.hessian_times;
        j["golden_times"] = res.golden_times;
        j["hessian_median"] = res.hessian_median;
        j["golden_median"] = res.golden_median;
        j["speedup"] = res.speedup;
        j["provenance"] = provenance(cfg, dataset_hash, {});
        lethe::write_text_file((dir / "bench.json").string(), j.dump(2) + "\n");
        char line[256];
        std::snprintf(line, sizeof(line),
                      "bench class=%s: hessian median %.4fs, golden median %.4fs, speedup %.1fx",
                      cls.c_str(), res.hessian_median, res.golden_median, res.speedup);
        say(line);
    }
    return 0;
}

struct Agg {
    std::vector<double> values;

    void add(double v) { values.push_back(v); }
    double mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    double stdev() const {
        if (values.size() < 2) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double v : values) s += (v - m) * (v - m);
        return std::sqrt(s / static_cast<double>(values.size() - 1));
    }
};

int cmd_report(const CommonArgs& args) {
    const lethe::ExperimentConfig cfg = resolve_config(args, true);
    const Layout lay = layout_for(cfg);
    if (!fs::exists(lay.root)) {
        throw std::runtime_error("no results under " + lay.root.string() +
                                 "; run `lethe evaluate` and `lethe mia` first");
    }

    // (method, class, metric) -> per-seed values
    std::map<std::string, std::map<std::string, std::map<std::string, Agg>>> table;
    std::set<std::pair<std::string, std::uint64_t>> seen_pre;  // (class, seed)

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(lay.root)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "metrics.json" || name == "mia.json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw std::runtime_error("no metrics under " + lay.root.string() +
                                 "; run `lethe evaluate` and `lethe mia` first");
    }

    for (const auto& path : files) {
        json j;
        try {
            j = json::parse(lethe::read_text_file(path.string()));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ": " + e.what());
        }
        const std::string method = j.value("method", "");
        const std::string cls = j.value("class", "");
        if (method.empty() || cls.empty()) continue;
        auto& per = table[method][cls];
        if (j.value("format", "") == "lethe-metrics") {
            per["acc_excluding"].add(j.at("acc_excluding").get<double>());
            if (j.contains("agreement")) per["agreement"].add(j.at("agreement").get<double>());
            per["ks_d"].add(j.at("ks_d").get<double>());
            per["ks_p"].add(j.at("ks_p").get<double>());
            const auto key = std::make_pair(cls, j.at("seed").get<std::uint64_t>());
            if (!seen_pre.count(key)) {
                seen_pre.insert(key);
                auto& pre = table["pre"][cls];
                pre["acc_all"].add(j.at("pre_acc_all").get<double>());
                pre["acc_excluding"].add(j.at("pre_acc_retained").get<double>());
            }
        } else if (j.value("format", "") == "lethe-mia") {
            if (j.contains("auc_retained")) {
                per["auc_retained"].add(j.at("auc_retained").get<double>());
            }
            if (j.contains("auc_target")) per["auc_target"].add(j.at("auc_target").get<double>());
        }
    }

    std::string csv = "dataset,method,class,metric,mean,std,seeds\n";
    const std::string ds = dataset_stem(cfg.dataset);
    for (const auto& [method, by_class] : table) {
        for (const auto& [cls, metrics] : by_class) {
            for (const auto& [metric, agg] : metrics) {
                char row[256];
                std::snprintf(row, sizeof(row), "%s,%s,%s,%s,%.6f,%.6f,%zu\n", ds.c_str(),
                              method.c_str(), cls.c_str(), metric.c_str(), agg.mean(),
                              agg.stdev(), agg.values.size());
                csv += row;
            }
        }
    }
    const fs::path out = lay.root / "summary.csv";
    lethe::write_text_file(out.string(), csv);

    say("summary -> " + out.string());
    const auto cell = [&table](const std::string& method, const std::string& cls,
                               const std::string& metric) -> std::string {
        const auto mit = table.find(method);
        if (mit == table.end()) return "-";
        const auto cit = mit->second.find(cls);
        if (cit == mit->second.end()) return "-";
        const auto git = cit->second.find(metric);
        if (git == cit->second.end()) return "-";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f±%.4f", git->second.mean(), git->second.stdev());
        return buf;
    };
    std::set<std::string> all_classes;
    for (const auto& [method, by_class] : table) {
        for (const auto& [cls, metrics] : by_class) all_classes.insert(cls);
    }
    for (const auto& cls : all_classes) {
        say("class " + cls + ":");
        char header[160];
        std::snprintf(header, sizeof(header), "  %-16s %-16s %-16s %-16s %-16s", "method",
                      "acc_excluding", "agreement", "auc_ret", "auc_c");
        say(header);
        for (const std::string method : {"pre", "hessian", "golden", "random_relabel"}) {
            char row[200];
            std::snprintf(row, sizeof(row), "  %-16s %-16s %-16s %-16s %-16s", method.c_str(),
                          cell(method, cls, "acc_excluding").c_str(),
                          cell(method, cls, "agreement").c_str(),
                          cell(method, cls, "auc_retained").c_str(),
                          cell(method, cls, "auc_target").c_str());
            say(row);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"class-level unlearning for linear-softmax text classifiers"};
    app.require_subcommand(1);

    CommonArgs train_args, unlearn_args, retrain_args, evaluate_args, mia_args, sweep_args,
        bench_args, report_args;

    CLI::App* sub_train = app.add_subcommand("train", "fit pipeline + model per seed");
    add_common(sub_train, train_args);
    CLI::App* sub_unlearn =
        app.add_subcommand("unlearn", "produce released models for each method/class/seed");
    add_common(sub_unlearn, unlearn_args);
    CLI::App* sub_retrain =
        app.add_subcommand("retrain", "produce the golden retrained reference models");
    add_common(sub_retrain, retrain_args);
    CLI::App* sub_evaluate =
        app.add_subcommand("evaluate", "utility, agreement, and margin diagnostics");
    add_common(sub_evaluate, evaluate_args);
    CLI::App* sub_mia = app.add_subcommand("mia", "shadow-model membership inference");
    add_common(sub_mia, mia_args);
    CLI::App* sub_sweep = app.add_subcommand("sweep", "release-noise trade-off sweep");
    add_common(sub_sweep, sweep_args);
    CLI::App* sub_bench = app.add_subcommand("bench", "downweight vs retrain wall-clock");
    add_common(sub_bench, bench_args);
    CLI::App* sub_report = app.add_subcommand("report", "aggregate results into summary.csv");
    add_common(sub_report, report_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (sub_train->parsed()) return cmd_train(train_args);
        if (sub_unlearn->parsed()) return run_unlearn(unlearn_args, {});
        if (sub_retrain->parsed()) return run_unlearn(retrain_args, {lethe::Method::golden});
        if (sub_evaluate->parsed()) return cmd_evaluate(evaluate_args);
        if (sub_mia->parsed()) return cmd_mia(mia_args);
        if (sub_sweep->parsed()) return cmd_sweep(sweep_args);
        if (sub_bench->parsed()) return cmd_bench(bench_args);
        if (sub_report->parsed()) return cmd_report(report_args);
    } catch (const lethe::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
