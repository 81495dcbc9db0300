#ifndef LETHE_TFIDF_HPP
#define LETHE_TFIDF_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lethe/linalg.hpp"

namespace lethe {

// Text pipeline settings. The defaults are the ones every experiment uses;
// the three boolean toggles exist so either convention can be reproduced.
struct PipelineConfig {
    int min_df = 2;
    int max_features = 50000;
    bool sublinear_tf = true;   // 1 + ln(tf) instead of raw tf
    bool smooth_idf = true;     // ln((1+N)/(1+df)) + 1 instead of ln(N/df) + 1
    bool l2_normalize = true;   // scale each row to unit L2 norm
    std::string stopword_list = "english-318";
};

// Fitted vocabulary: term -> dense column id, with document frequencies and
// idf weights. Column ids are assigned by descending document frequency,
// ties broken lexicographically. Immutable after fit.
struct Vocabulary {
    std::vector<std::string> terms;       // index = column id
    std::vector<std::int64_t> doc_freq;   // per column
    std::vector<double> idf;              // per column
    std::unordered_map<std::string, int> column_of;
    std::int64_t fit_docs = 0;
    PipelineConfig config;

    int dim() const { return static_cast<int>(terms.size()); }
};

// The frozen stopword list shipped with the repo (sorted, 318 words).
const std::vector<std::string>& english_stopwords();

// Lowercase and split on non-alphanumeric runs (UTF-8 aware: any codepoint
// past ASCII counts as a word character). Tokens shorter than two
// codepoints and stopwords are dropped.
std::vector<std::string> tokenize(const std::string& text);

// Fit a vocabulary on the given documents. Throws if nothing survives the
// min_df / stopword filters.
Vocabulary fit_vocabulary(std::span<const std::string> texts, const PipelineConfig& config);

// TF-IDF rows for the given documents under a fitted vocabulary. Documents
// with no in-vocabulary terms produce all-zero rows.
CsrMatrix transform(const Vocabulary& vocab, std::span<const std::string> texts);

// Debug export/import of a feature matrix: the three CSR arrays in a small
// binary container.
void save_csr(const CsrMatrix& m, const std::string& path);
CsrMatrix load_csr(const std::string& path);

}  // namespace lethe

#endif  // LETHE_TFIDF_HPP
