#include "lethe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lethe/rng.hpp"

namespace lethe {

namespace {

LabeledCorpus from_pairs(std::vector<std::string> texts, std::vector<std::string> raw_labels) {
    if (texts.empty()) throw std::runtime_error("corpus is empty");

    std::vector<std::string> names = raw_labels;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());

    std::map<std::string, int> id_of;
    for (std::size_t i = 0; i < names.size(); ++i) id_of[names[i]] = static_cast<int>(i);

    LabeledCorpus corpus;
    corpus.docs = std::move(texts);
    corpus.label_names = std::move(names);
    corpus.labels.reserve(raw_labels.size());
    for (const auto& l : raw_labels) corpus.labels.push_back(id_of.at(l));
    return corpus;
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

LabeledCorpus load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::vector<std::string> texts;
    std::vector<std::string> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": not a JSON object");
        }
        if (!obj.contains("text") || !obj["text"].is_string()) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                     ": missing string field \"text\"");
        }
        if (!obj.contains("label") || !obj["label"].is_string()) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                     ": missing string field \"label\"");
        }
        texts.push_back(obj["text"].get<std::string>());
        labels.push_back(obj["label"].get<std::string>());
    }
    if (texts.empty()) throw std::runtime_error(path + ": no documents");
    return from_pairs(std::move(texts), std::move(labels));
}

namespace {

// RFC 4180 record reader: handles quoted fields with embedded commas,
// doubled quotes, and newlines inside quotes. Returns false at EOF.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& lineno) {
    fields.clear();
    int ch = in.get();
    if (ch == EOF) return false;
    ++lineno;

    std::string field;
    bool quoted = false;
    while (true) {
        if (ch == EOF) {
            fields.push_back(field);
            return true;
        }
        char c = static_cast<char>(ch);
        if (quoted) {
            if (c == '"') {
                int next = in.peek();
                if (next == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++lineno;
                field.push_back(c);
            }
        } else {
            if (c == '"' && field.empty()) {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(field);
                field.clear();
            } else if (c == '\r') {
                // swallow; newline handled next
            } else if (c == '\n') {
                fields.push_back(field);
                return true;
            } else {
                field.push_back(c);
            }
        }
        ch = in.get();
    }
}

}  // namespace

LabeledCorpus load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::vector<std::string> fields;
    std::size_t lineno = 0;
    if (!read_csv_record(in, fields, lineno)) throw std::runtime_error(path + ": empty file");
    if (fields.size() != 2) {
        throw std::runtime_error(path + ": header must have exactly columns text,label");
    }
    int text_col, label_col;
    if (fields[0] == "text" && fields[1] == "label") {
        text_col = 0;
        label_col = 1;
    } else if (fields[0] == "label" && fields[1] == "text") {
        text_col = 1;
        label_col = 0;
    } else {
        throw std::runtime_error(path + ": header must name columns text,label");
    }

    std::vector<std::string> texts;
    std::vector<std::string> labels;
    while (read_csv_record(in, fields, lineno)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
        if (fields.size() != 2) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": expected 2 fields, got " +
                                     std::to_string(fields.size()));
        }
        texts.push_back(fields[text_col]);
        labels.push_back(fields[label_col]);
    }
    if (texts.empty()) throw std::runtime_error(path + ": no documents");
    return from_pairs(std::move(texts), std::move(labels));
}

namespace {

// Apportion `total` slots over labels with quotas total * n_l / n by
// largest remainder. Guarantees floor(quota) <= count <= ceil(quota).
std::vector<int> apportion(const std::vector<int>& label_counts, int n, int total) {
    const std::size_t k = label_counts.size();
    std::vector<int> out(k, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t l = 0; l < k; ++l) {
        const double quota = static_cast<double>(total) * label_counts[l] / n;
        out[l] = static_cast<int>(std::floor(quota));
        assigned += out[l];
        remainders.push_back({quota - out[l], l});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // deterministic tie order
    });
    for (int i = 0; i < total - assigned; ++i) out[remainders[i].second] += 1;
    return out;
}

}  // namespace

TrainTestSplit split_train_test(const LabeledCorpus& corpus, double test_fraction,
                                double val_fraction, std::uint64_t seed) {
    if (test_fraction < 0.0 || val_fraction < 0.0 || test_fraction + val_fraction >= 1.0) {
        throw std::invalid_argument("split fractions must be nonnegative and sum below 1");
    }
    const int n = corpus.size();
    const int k = corpus.num_classes();

    std::vector<std::vector<int>> by_label(k);
    for (int i = 0; i < n; ++i) by_label[corpus.labels[i]].push_back(i);
    std::vector<int> label_counts(k);
    for (int l = 0; l < k; ++l) label_counts[l] = static_cast<int>(by_label[l].size());

    const int n_test = static_cast<int>(std::llround(n * test_fraction));
    const int n_val = static_cast<int>(std::llround(n * val_fraction));
    std::vector<int> test_per_label = apportion(label_counts, n, n_test);
    std::vector<int> val_per_label = apportion(label_counts, n, n_val);

    std::vector<std::string> starved;
    for (int l = 0; l < k; ++l) {
        if (label_counts[l] - test_per_label[l] - val_per_label[l] < 1) {
            starved.push_back(corpus.label_names[l]);
        }
    }
    if (!starved.empty()) {
        std::string msg = "cannot stratify: label(s) with fewer documents than the split requires:";
        for (const auto& s : starved) msg += " " + s;
        throw std::runtime_error(msg);
    }

    TrainTestSplit out;
    for (int l = 0; l < k; ++l) {
        auto& idx = by_label[l];
        Rng rng(seed + seed_offset::kSplit + static_cast<std::uint64_t>(l) * 0x9e3779b97f4a7c15ull);
        rng.shuffle(idx);
        int pos = 0;
        for (int i = 0; i < test_per_label[l]; ++i) out.test.push_back(idx[pos++]);
        for (int i = 0; i < val_per_label[l]; ++i) out.val.push_back(idx[pos++]);
        for (; pos < label_counts[l]; ++pos) out.train.push_back(idx[pos]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

DatasetSplit split_by_class(const LabeledCorpus& corpus, std::span<const int> indices, int c) {
    if (c < 0 || c >= corpus.num_classes()) {
        throw std::invalid_argument("split_by_class: class id out of range");
    }
    DatasetSplit out;
    out.target_class = c;
    for (int i : indices) {
        if (corpus.labels[i] == c) {
            out.deleted.push_back(i);
        } else {
            out.retained.push_back(i);
        }
    }
    return out;
}

}  // namespace lethe
