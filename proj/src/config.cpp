#include "lethe/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <span>
#include <sstream>

#include "json.hpp"

#include "lethe/serialize.hpp"

namespace lethe {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool valid_key(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

[[noreturn]] void fail(int line, const std::string& message) {
    throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line, int lineno) {
    std::string out;
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            if (c == '\\') {
                if (i + 1 >= line.size()) fail(lineno, "dangling escape");
                out += c;
                out += line[++i];
                continue;
            }
            if (c == '"') in_string = false;
        } else {
            if (c == '#') break;
            if (c == '"') in_string = true;
        }
        out += c;
    }
    if (in_string) fail(lineno, "unterminated string");
    return out;
}

std::string parse_string_token(std::string_view token, int lineno) {
    if (token.size() < 2 || token.front() != '"' || token.back() != '"') {
        fail(lineno, "malformed string value");
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < token.size(); ++i) {
        char c = token[i];
        if (c == '"') fail(lineno, "unescaped quote inside string");
        if (c == '\\') {
            if (i + 2 >= token.size()) fail(lineno, "dangling escape");
            const char e = token[++i];
            switch (e) {
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                default: fail(lineno, std::string("unsupported escape \\") + e);
            }
        }
        out += c;
    }
    return out;
}

bool parse_number_token(const std::string& token, double* d, std::int64_t* i, bool* is_int) {
    if (token.empty()) return false;
    std::string t = token;
    t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
    const char* b = t.data();
    const char* e = t.data() + t.size();
    std::int64_t iv = 0;
    auto ir = std::from_chars(b, e, iv);
    if (ir.ec == std::errc() && ir.ptr == e) {
        *i = iv;
        *d = static_cast<double>(iv);
        *is_int = true;
        return true;
    }
    double dv = 0.0;
    auto dr = std::from_chars(b, e, dv);
    if (dr.ec == std::errc() && dr.ptr == e && std::isfinite(dv)) {
        *d = dv;
        *i = static_cast<std::int64_t>(dv);
        *is_int = false;
        return true;
    }
    return false;
}

ConfigValue parse_scalar(const std::string& token, int lineno) {
    ConfigValue v;
    v.line = lineno;
    if (!token.empty() && token.front() == '"') {
        v.kind = ConfigValue::Kind::string;
        v.s = parse_string_token(token, lineno);
        return v;
    }
    if (token == "true" || token == "false") {
        v.kind = ConfigValue::Kind::boolean;
        v.b = token == "true";
        return v;
    }
    bool is_int = false;
    if (parse_number_token(token, &v.d, &v.i, &is_int)) {
        v.kind = is_int ? ConfigValue::Kind::integer : ConfigValue::Kind::real;
        return v;
    }
    fail(lineno, "cannot parse value `" + token + "`");
}

// Splits an array body at top-level commas, respecting quoted strings.
std::vector<std::string> split_array(std::string_view body, int lineno) {
    std::vector<std::string> parts;
    std::string cur;
    bool in_string = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (in_string) {
            cur += c;
            if (c == '\\' && i + 1 < body.size()) cur += body[++i];
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
            cur += c;
        } else if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string last = trim(cur);
    if (!last.empty()) parts.push_back(last);
    for (const auto& p : parts) {
        if (p.empty()) fail(lineno, "empty array element");
    }
    return parts;
}

ConfigValue parse_value(const std::string& token, int lineno) {
    if (!token.empty() && token.front() == '[') {
        if (token.back() != ']') fail(lineno, "unterminated array");
        ConfigValue v;
        v.line = lineno;
        const auto parts = split_array(std::string_view(token).substr(1, token.size() - 2), lineno);
        bool any_string = false, any_number = false;
        for (const auto& part : parts) {
            const ConfigValue elem = parse_scalar(part, lineno);
            switch (elem.kind) {
                case ConfigValue::Kind::string:
                    any_string = true;
                    v.strings.push_back(elem.s);
                    break;
                case ConfigValue::Kind::integer:
                case ConfigValue::Kind::real:
                    any_number = true;
                    v.numbers.push_back(elem.d);
                    break;
                default:
                    fail(lineno, "array elements must be strings or numbers");
            }
        }
        if (any_string && any_number) fail(lineno, "mixed array element types");
        v.kind = any_string ? ConfigValue::Kind::string_array : ConfigValue::Kind::number_array;
        return v;
    }
    return parse_scalar(token, lineno);
}

}  // namespace

std::map<std::string, ConfigValue> parse_toml_subset(const std::string& text) {
    std::map<std::string, ConfigValue> out;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string line = trim(strip_comment(raw, lineno));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(lineno, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_key(section)) fail(lineno, "invalid section name `" + section + "`");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(lineno, "expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail(lineno, "invalid key `" + key + "`");
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) fail(lineno, "duplicate key `" + full + "`");
        out.emplace(full, parse_value(trim(line.substr(eq + 1)), lineno));
    }
    return out;
}

std::vector<double> default_sigma_grid() {
    std::vector<double> grid{0.0};
    const int points = 24;
    for (int i = 0; i < points; ++i) {
        const double e = -3.0 + 6.0 * static_cast<double>(i) / (points - 1);
        grid.push_back(std::pow(10.0, e));
    }
    return grid;
}

namespace {

// Pulls typed values out of the parsed map, recording every problem.
class Extractor {
public:
    Extractor(const std::map<std::string, ConfigValue>& values, std::vector<std::string>& errors)
        : values_(values), errors_(errors) {}

    void get(const std::string& key, std::string* out) {
        const ConfigValue* v = find(key);
        if (!v) return;
        if (v->kind != ConfigValue::Kind::string) return type_error(key, *v, "a string");
        *out = v->s;
    }

    void get(const std::string& key, bool* out) {
        const ConfigValue* v = find(key);
        if (!v) return;
        if (v->kind != ConfigValue::Kind::boolean) return type_error(key, *v, "a boolean");
        *out = v->b;
    }

    void get(const std::string& key, double* out) {
        const ConfigValue* v = find(key);
        if (!v) return;
        if (v->kind != ConfigValue::Kind::integer && v->kind != ConfigValue::Kind::real) {
            return type_error(key, *v, "a number");
        }
        *out = v->d;
    }

    void get(const std::string& key, int* out) {
        const ConfigValue* v = find(key);
        if (!v) return;
        if (v->kind != ConfigValue::Kind::integer) return type_error(key, *v, "an integer");
        *out = static_cast<int>(v->i);
    }

    void get(const std::string& key, std::vector<double>* out) {
        const ConfigValue* v = find(key);
        if (!v) return;
        if (v->kind != ConfigValue::Kind::number_array) return type_error(key, *v, "a number array");
        *out = v->numbers;
    }

    void get(const std::string& key, std::vector<std::string>* out) {
        const ConfigValue* v = find(key);
        if (!v) return;
        if (v->kind != ConfigValue::Kind::string_array) return type_error(key, *v, "a string array");
        *out = v->strings;
    }

    void get(const std::string& key, std::vector<std::uint64_t>* out) {
        const ConfigValue* v = find(key);
        if (!v) return;
        if (v->kind != ConfigValue::Kind::number_array) {
            return type_error(key, *v, "an integer array");
        }
        std::vector<std::uint64_t> seeds;
        for (double d : v->numbers) {
            if (d < 0 || d != std::floor(d)) {
                errors_.push_back(key + ": entries must be non-negative integers (line " +
                                  std::to_string(v->line) + ")");
                return;
            }
            seeds.push_back(static_cast<std::uint64_t>(d));
        }
        *out = std::move(seeds);
    }

    void report_unknown() {
        for (const auto& [key, value] : values_) {
            if (!used_.count(key)) {
                errors_.push_back("unknown key `" + key + "` (line " + std::to_string(value.line) +
                                  ")");
            }
        }
    }

private:
    const ConfigValue* find(const std::string& key) {
        used_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? nullptr : &it->second;
    }

    void type_error(const std::string& key, const ConfigValue& v, const char* want) {
        errors_.push_back(key + ": expected " + want + " (line " + std::to_string(v.line) + ")");
    }

    const std::map<std::string, ConfigValue>& values_;
    std::vector<std::string>& errors_;
    std::set<std::string> used_;
};

bool ascending(std::span<const double> grid) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) return false;
    }
    return true;
}

}  // namespace

ExperimentConfig config_from_values(const std::map<std::string, ConfigValue>& values,
                                    std::vector<std::string>& errors) {
    ExperimentConfig cfg;
    Extractor ex(values, errors);

    ex.get("dataset", &cfg.dataset);
    ex.get("format", &cfg.format);
    ex.get("output_dir", &cfg.output_dir);
    ex.get("classes", &cfg.classes);
    ex.get("seeds", &cfg.seeds);
    ex.get("test_fraction", &cfg.test_fraction);
    ex.get("val_fraction", &cfg.val_fraction);
    ex.get("workers", &cfg.workers);

    std::vector<std::string> method_names;
    ex.get("methods", &method_names);
    if (!method_names.empty()) {
        cfg.methods.clear();
        for (const auto& name : method_names) {
            Method m;
            if (!parse_method(name, &m) || m == Method::pre) {
                errors.push_back("methods: unknown method `" + name +
                                 "` (valid: hessian, golden, random_relabel)");
            } else {
                cfg.methods.push_back(m);
            }
        }
    }

    ex.get("pipeline.min_df", &cfg.pipeline.min_df);
    ex.get("pipeline.max_features", &cfg.pipeline.max_features);
    ex.get("pipeline.sublinear_tf", &cfg.pipeline.sublinear_tf);
    ex.get("pipeline.smooth_idf", &cfg.pipeline.smooth_idf);
    ex.get("pipeline.l2_normalize", &cfg.pipeline.l2_normalize);

    ex.get("train.C", &cfg.train.C);
    ex.get("train.grad_tol", &cfg.train.grad_tol);
    ex.get("train.max_epochs", &cfg.train.max_epochs);
    ex.get("train.memory", &cfg.train.memory);
    ex.get("train.gradient_descent", &cfg.train.gradient_descent);

    ex.get("cg.tol", &cfg.cg_tol);
    ex.get("cg.max_iter", &cfg.cg_max_iter);

    ex.get("mia.shadows", &cfg.shadows);
    ex.get("mia.attacker_C", &cfg.attacker_C);

    ex.get("noise.sigma_grid", &cfg.sigma_grid);
    ex.get("noise.tau_grid", &cfg.tau_grid);
    ex.get("noise.c_grid", &cfg.c_grid);

    ex.get("bench.repeats", &cfg.bench_repeats);

    ex.report_unknown();
    return cfg;
}

void validate_config(const ExperimentConfig& cfg, bool check_dataset) {
    std::vector<std::string> errors;
    if (cfg.dataset.empty()) {
        errors.push_back("dataset: required");
    } else if (check_dataset) {
        std::ifstream probe(cfg.dataset);
        if (!probe) errors.push_back("dataset: path `" + cfg.dataset + "` does not exist");
    }
    if (cfg.format != "jsonl" && cfg.format != "csv") {
        errors.push_back("format: must be `jsonl` or `csv`, got `" + cfg.format + "`");
    }
    if (cfg.output_dir.empty()) errors.push_back("output_dir: required");
    if (cfg.methods.empty()) errors.push_back("methods: at least one required");
    if (cfg.seeds.empty()) errors.push_back("seeds: at least one required");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        errors.push_back("test_fraction: must be in (0, 1)");
    }
    if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0)) {
        errors.push_back("val_fraction: must be in [0, 1)");
    }
    if (cfg.test_fraction + cfg.val_fraction >= 1.0) {
        errors.push_back("test_fraction + val_fraction: must leave room for training data");
    }
    if (cfg.pipeline.min_df < 1) errors.push_back("pipeline.min_df: must be >= 1");
    if (cfg.pipeline.max_features < 1) errors.push_back("pipeline.max_features: must be >= 1");
    if (!(cfg.train.C > 0.0)) errors.push_back("train.C: must be > 0");
    if (!(cfg.train.grad_tol > 0.0)) errors.push_back("train.grad_tol: must be > 0");
    if (cfg.train.max_epochs < 1) errors.push_back("train.max_epochs: must be >= 1");
    if (cfg.train.memory < 1) errors.push_back("train.memory: must be >= 1");
    if (!(cfg.cg_tol > 0.0)) errors.push_back("cg.tol: must be > 0");
    if (cfg.cg_max_iter < 1) errors.push_back("cg.max_iter: must be >= 1");
    if (cfg.shadows < 2) errors.push_back("mia.shadows: must be >= 2");
    if (!(cfg.attacker_C > 0.0)) errors.push_back("mia.attacker_C: must be > 0");
    if (!cfg.sigma_grid.empty() && (!ascending(cfg.sigma_grid) || cfg.sigma_grid.front() < 0.0)) {
        errors.push_back("noise.sigma_grid: must be ascending and non-negative");
    }
    if (!ascending(cfg.tau_grid)) errors.push_back("noise.tau_grid: must be ascending");
    if (!ascending(cfg.c_grid) || (!cfg.c_grid.empty() && cfg.c_grid.front() <= 0.0)) {
        errors.push_back("noise.c_grid: must be ascending and positive");
    }
    if (cfg.bench_repeats < 1) errors.push_back("bench.repeats: must be >= 1");
    if (cfg.workers < 0) errors.push_back("workers: must be >= 0");

    if (!errors.empty()) {
        std::string message = "invalid configuration:";
        for (const auto& e : errors) message += "\n  " + e;
        throw ConfigError(message);
    }
}

ExperimentConfig load_config(const std::string& path, bool check_dataset) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    std::vector<std::string> errors;
    ExperimentConfig cfg = config_from_values(parse_toml_subset(text), errors);
    if (!errors.empty()) {
        std::string message = "invalid configuration:";
        for (const auto& e : errors) message += "\n  " + e;
        throw ConfigError(message);
    }
    validate_config(cfg, check_dataset);
    return cfg;
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = cfg.dataset;
    j["format"] = cfg.format;
    j["output_dir"] = cfg.output_dir;
    j["classes"] = cfg.classes;
    std::vector<std::string> methods;
    for (Method m : cfg.methods) methods.push_back(method_name(m));
    j["methods"] = methods;
    j["seeds"] = cfg.seeds;
    j["test_fraction"] = cfg.test_fraction;
    j["val_fraction"] = cfg.val_fraction;
    j["pipeline"] = {{"min_df", cfg.pipeline.min_df},
                     {"max_features", cfg.pipeline.max_features},
                     {"sublinear_tf", cfg.pipeline.sublinear_tf},
                     {"smooth_idf", cfg.pipeline.smooth_idf},
                     {"l2_normalize", cfg.pipeline.l2_normalize},
                     {"stopword_list", cfg.pipeline.stopword_list}};
    j["train"] = {{"C", cfg.train.C},
                  {"grad_tol", cfg.train.grad_tol},
                  {"max_epochs", cfg.train.max_epochs},
                  {"memory", cfg.train.memory},
                  {"gradient_descent", cfg.train.gradient_descent}};
    j["cg"] = {{"tol", cfg.cg_tol}, {"max_iter", cfg.cg_max_iter}};
    j["mia"] = {{"shadows", cfg.shadows}, {"attacker_C", cfg.attacker_C}};
    j["noise"] = {{"sigma_grid", cfg.sigma_grid.empty() ? default_sigma_grid() : cfg.sigma_grid},
                  {"tau_grid", cfg.tau_grid},
                  {"c_grid", cfg.c_grid}};
    j["bench"] = {{"repeats", cfg.bench_repeats}};
    return j.dump();
}

}  // namespace lethe
