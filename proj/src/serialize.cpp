#include "lethe/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lethe {

using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 16);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw std::runtime_error("error reading " + path);
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.good()) throw std::runtime_error("error writing " + path);
}

std::string file_hash(const std::string& path) { return fnv1a_hex(read_text_file(path)); }

namespace {

json parse_artifact(const std::string& path, const char* format, int version) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != format) {
        throw std::runtime_error(path + ": not a " + std::string(format) + " artifact");
    }
    if (j.value("version", 0) != version) {
        throw std::runtime_error(path + ": unsupported " + std::string(format) + " version");
    }
    return j;
}

void dump_artifact(const json& j, const std::string& path) {
    write_text_file(path, j.dump(2) + "\n");
}

json model_to_json(const ModelParams& model) {
    json j;
    j["k"] = model.num_classes();
    j["d"] = model.dim();
    j["lambda"] = model.lambda;
    j["w"] = model.W.v;
    return j;
}

ModelParams model_from_json(const json& j, const std::string& path) {
    ModelParams model;
    const int k = j.at("k").get<int>();
    const int d = j.at("d").get<int>();
    model.lambda = j.at("lambda").get<double>();
    model.W = DenseMat(k, d);
    const auto& w = j.at("w");
    if (static_cast<int>(w.size()) != k * d) {
        throw std::runtime_error(path + ": weight matrix size mismatch");
    }
    model.W.v = w.get<std::vector<double>>();
    for (double v : model.W.v) {
        if (!std::isfinite(v)) throw std::runtime_error(path + ": non-finite weight");
    }
    if (k < 2 || d < 1 || !(model.lambda > 0.0)) {
        throw std::runtime_error(path + ": invalid model header");
    }
    return model;
}

}  // namespace

void save_model(const ModelParams& model, const std::string& path,
                const std::string& vocab_hash) {
    json j = model_to_json(model);
    j["format"] = "lethe-model";
    j["version"] = 1;
    j["vocab_hash"] = vocab_hash;
    dump_artifact(j, path);
}

ModelParams load_model(const std::string& path, std::string* vocab_hash) {
    const json j = parse_artifact(path, "lethe-model", 1);
    if (vocab_hash) *vocab_hash = j.value("vocab_hash", "");
    return model_from_json(j, path);
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    json j;
    j["format"] = "lethe-vocab";
    j["version"] = 1;
    j["terms"] = vocab.terms;
    j["doc_freq"] = vocab.doc_freq;
    j["idf"] = vocab.idf;
    j["fit_docs"] = vocab.fit_docs;
    json cfg;
    cfg["min_df"] = vocab.config.min_df;
    cfg["max_features"] = vocab.config.max_features;
    cfg["sublinear_tf"] = vocab.config.sublinear_tf;
    cfg["smooth_idf"] = vocab.config.smooth_idf;
    cfg["l2_normalize"] = vocab.config.l2_normalize;
    cfg["stopword_list"] = vocab.config.stopword_list;
    j["config"] = cfg;
    dump_artifact(j, path);
}

Vocabulary load_vocabulary(const std::string& path) {
    const json j = parse_artifact(path, "lethe-vocab", 1);
    Vocabulary vocab;
    vocab.terms = j.at("terms").get<std::vector<std::string>>();
    vocab.doc_freq = j.at("doc_freq").get<std::vector<std::int64_t>>();
    vocab.idf = j.at("idf").get<std::vector<double>>();
    vocab.fit_docs = j.at("fit_docs").get<std::int64_t>();
    const auto& cfg = j.at("config");
    vocab.config.min_df = cfg.at("min_df").get<int>();
    vocab.config.max_features = cfg.at("max_features").get<int>();
    vocab.config.sublinear_tf = cfg.at("sublinear_tf").get<bool>();
    vocab.config.smooth_idf = cfg.at("smooth_idf").get<bool>();
    vocab.config.l2_normalize = cfg.at("l2_normalize").get<bool>();
    vocab.config.stopword_list = cfg.at("stopword_list").get<std::string>();
    if (vocab.terms.size() != vocab.doc_freq.size() || vocab.terms.size() != vocab.idf.size()) {
        throw std::runtime_error(path + ": vocabulary arrays disagree in length");
    }
    for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
        vocab.column_of.emplace(vocab.terms[i], static_cast<int>(i));
    }
    if (vocab.column_of.size() != vocab.terms.size()) {
        throw std::runtime_error(path + ": duplicate vocabulary term");
    }
    return vocab;
}

void save_release(const Release& release, const std::string& path,
                  const std::string& vocab_hash) {
    json j;
    j["format"] = "lethe-release";
    j["version"] = 1;
    j["method"] = method_name(release.method);
    j["num_classes"] = release.num_classes;
    j["removed_class"] = release.removed_class;
    j["row_to_label"] = release.row_to_label;
    j["noise_sigma"] = release.noise_sigma;
    j["noise_seed"] = release.noise_seed;
    j["vocab_hash"] = vocab_hash;
    j["model"] = model_to_json(release.params);
    if (release.has_update) {
        json u;
        u["class_gradient_norm"] = release.update.class_gradient_norm;
        u["cg_iterations"] = release.update.cg.iterations;
        u["cg_residual"] = release.update.cg.residual_norm;
        u["cg_converged"] = release.update.cg.converged;
        j["update"] = u;
    }
    dump_artifact(j, path);
}

Release load_release(const std::string& path, std::string* vocab_hash) {
    const json j = parse_artifact(path, "lethe-release", 1);
    Release release;
    if (!parse_method(j.at("method").get<std::string>(), &release.method)) {
        throw std::runtime_error(path + ": unknown method");
    }
    release.num_classes = j.at("num_classes").get<int>();
    release.removed_class = j.at("removed_class").get<int>();
    release.row_to_label = j.at("row_to_label").get<std::vector<int>>();
    release.noise_sigma = j.at("noise_sigma").get<double>();
    release.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    if (vocab_hash) *vocab_hash = j.value("vocab_hash", "");
    release.params = model_from_json(j.at("model"), path);
    if (j.contains("update")) {
        const auto& u = j.at("update");
        release.has_update = true;
        release.update.class_gradient_norm = u.at("class_gradient_norm").get<double>();
        release.update.cg.iterations = u.at("cg_iterations").get<int>();
        release.update.cg.residual_norm = u.at("cg_residual").get<double>();
        release.update.cg.converged = u.at("cg_converged").get<bool>();
        release.update.cg_warning = !release.update.cg.converged;
    }
    const int rows = release.params.num_classes();
    if (static_cast<int>(release.row_to_label.size()) != rows) {
        throw std::runtime_error(path + ": row_to_label length mismatch");
    }
    return release;
}

void save_split(const SplitArtifact& artifact, const std::string& path) {
    json j;
    j["format"] = "lethe-split";
    j["version"] = 1;
    j["seed"] = artifact.seed;
    j["test_fraction"] = artifact.test_fraction;
    j["val_fraction"] = artifact.val_fraction;
    j["dataset_hash"] = artifact.dataset_hash;
    j["train"] = artifact.split.train;
    j["val"] = artifact.split.val;
    j["test"] = artifact.split.test;
    dump_artifact(j, path);
}

SplitArtifact load_split(const std::string& path) {
    const json j = parse_artifact(path, "lethe-split", 1);
    SplitArtifact artifact;
    artifact.seed = j.at("seed").get<std::uint64_t>();
    artifact.test_fraction = j.at("test_fraction").get<double>();
    artifact.val_fraction = j.at("val_fraction").get<double>();
    artifact.dataset_hash = j.at("dataset_hash").get<std::string>();
    artifact.split.train = j.at("train").get<std::vector<int>>();
    artifact.split.val = j.at("val").get<std::vector<int>>();
    artifact.split.test = j.at("test").get<std::vector<int>>();
    return artifact;
}

void save_update_log(const UnlearnUpdate& update, const std::string& path) {
    json j;
    j["format"] = "lethe-update";
    j["version"] = 1;
    j["class_gradient_norm"] = update.class_gradient_norm;
    j["cg_iterations"] = update.cg.iterations;
    j["cg_residual"] = update.cg.residual_norm;
    j["cg_converged"] = update.cg.converged;
    j["cg_warning"] = update.cg_warning;
    j["wall_time"] = update.wall_time;
    dump_artifact(j, path);
}

}  // namespace lethe
