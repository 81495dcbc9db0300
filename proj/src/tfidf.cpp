#include "lethe/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace lethe {

namespace {

bool ascii_alnum(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Byte length of the UTF-8 sequence starting at s[i], or 0 if invalid.
std::size_t utf8_len(const std::string& s, std::size_t i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    if ((c & 0x80u) == 0) return 1;
    if ((c & 0xE0u) == 0xC0u) len = 2;
    else if ((c & 0xF0u) == 0xE0u) len = 3;
    else if ((c & 0xF8u) == 0xF0u) len = 4;
    else return 0;
    if (i + len > s.size()) return 0;
    for (std::size_t j = 1; j < len; ++j) {
        if ((static_cast<unsigned char>(s[i + j]) & 0xC0u) != 0x80u) return 0;
    }
    return len;
}

const std::set<std::string>& stopword_set() {
    static const std::set<std::string> s(english_stopwords().begin(), english_stopwords().end());
    return s;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t current_cp = 0;  // codepoints in the current token

    auto flush = [&]() {
        if (current_cp >= 2 && stopword_set().count(current) == 0) {
            tokens.push_back(current);
        }
        current.clear();
        current_cp = 0;
    };

    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80u) {
            if (ascii_alnum(c)) {
                current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
                ++current_cp;
            } else {
                flush();
            }
            ++i;
        } else {
            const std::size_t len = utf8_len(text, i);
            if (len == 0) {
                flush();  // invalid byte acts as a separator
                ++i;
            } else {
                current.append(text, i, len);
                ++current_cp;
                i += len;
            }
        }
    }
    flush();
    return tokens;
}

Vocabulary fit_vocabulary(std::span<const std::string> texts, const PipelineConfig& config) {
    if (texts.empty()) throw std::invalid_argument("fit_vocabulary: no documents");

    std::map<std::string, std::int64_t> df;
    std::set<std::string> seen;
    for (const auto& text : texts) {
        seen.clear();
        for (auto& tok : tokenize(text)) seen.insert(std::move(tok));
        for (const auto& t : seen) df[t] += 1;
    }

    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [term, freq] : df) {
        if (freq >= config.min_df) kept.push_back({term, freq});
    }
    // Descending document frequency, then lexicographic.
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(kept.size()) > config.max_features) kept.resize(config.max_features);
    if (kept.empty()) {
        throw std::runtime_error("fit_vocabulary: vocabulary is empty after filtering (min_df=" +
                                 std::to_string(config.min_df) + ")");
    }

    Vocabulary vocab;
    vocab.config = config;
    vocab.fit_docs = static_cast<std::int64_t>(texts.size());
    vocab.terms.reserve(kept.size());
    vocab.doc_freq.reserve(kept.size());
    vocab.idf.reserve(kept.size());
    const double n = static_cast<double>(vocab.fit_docs);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& [term, freq] = kept[i];
        vocab.terms.push_back(term);
        vocab.doc_freq.push_back(freq);
        const double idf = config.smooth_idf ? std::log((1.0 + n) / (1.0 + freq)) + 1.0
                                             : std::log(n / freq) + 1.0;
        vocab.idf.push_back(idf);
        vocab.column_of[term] = static_cast<int>(i);
    }
    return vocab;
}

CsrMatrix transform(const Vocabulary& vocab, std::span<const std::string> texts) {
    CsrMatrix m;
    m.rows = static_cast<int>(texts.size());
    m.cols = vocab.dim();
    m.row_ptr.assign(1, 0);

    std::map<int, std::int64_t> counts;  // ordered: column ids come out increasing
    for (const auto& text : texts) {
        counts.clear();
        for (const auto& tok : tokenize(text)) {
            auto it = vocab.column_of.find(tok);
            if (it != vocab.column_of.end()) counts[it->second] += 1;
        }
        const std::size_t start = m.val.size();
        double sq = 0.0;
        for (const auto& [col, tf] : counts) {
            const double tfw = vocab.config.sublinear_tf ? 1.0 + std::log(static_cast<double>(tf))
                                                         : static_cast<double>(tf);
            const double w = tfw * vocab.idf[col];
            m.col.push_back(col);
            m.val.push_back(w);
            sq += w * w;
        }
        if (vocab.config.l2_normalize && sq > 0.0) {
            const double inv = 1.0 / std::sqrt(sq);
            for (std::size_t k = start; k < m.val.size(); ++k) m.val[k] *= inv;
        }
        m.row_ptr.push_back(static_cast<std::int64_t>(m.val.size()));
    }
    return m;
}

namespace {
constexpr char kCsrMagic[8] = {'L', 'E', 'T', 'H', 'C', 'S', 'R', '1'};
}

void save_csr(const CsrMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(kCsrMagic, sizeof(kCsrMagic));
    const std::int64_t dims[3] = {m.rows, m.cols, m.nnz()};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(m.row_ptr.data()),
              static_cast<std::streamsize>(m.row_ptr.size() * sizeof(std::int64_t)));
    out.write(reinterpret_cast<const char*>(m.col.data()),
              static_cast<std::streamsize>(m.col.size() * sizeof(int)));
    out.write(reinterpret_cast<const char*>(m.val.data()),
              static_cast<std::streamsize>(m.val.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

CsrMatrix load_csr(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCsrMagic, sizeof(magic)) != 0) {
        throw std::runtime_error(path + ": not a CSR container");
    }
    std::int64_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    CsrMatrix m;
    m.rows = static_cast<int>(dims[0]);
    m.cols = static_cast<int>(dims[1]);
    m.row_ptr.resize(m.rows + 1);
    m.col.resize(dims[2]);
    m.val.resize(dims[2]);
    in.read(reinterpret_cast<char*>(m.row_ptr.data()),
            static_cast<std::streamsize>(m.row_ptr.size() * sizeof(std::int64_t)));
    in.read(reinterpret_cast<char*>(m.col.data()),
            static_cast<std::streamsize>(m.col.size() * sizeof(int)));
    in.read(reinterpret_cast<char*>(m.val.data()),
            static_cast<std::streamsize>(m.val.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated CSR container");
    return m;
}

}  // namespace lethe
