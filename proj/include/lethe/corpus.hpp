#ifndef LETHE_CORPUS_HPP
#define LETHE_CORPUS_HPP

#include <span>
#include <string>
#include <vector>

namespace lethe {

// Labeled document collection. Label ids are dense 0..K-1, assigned by
// lexicographic sort of the label strings so ids are stable across runs
// and platforms. Immutable after construction.
struct LabeledCorpus {
    std::vector<std::string> docs;
    std::vector<int> labels;
    std::vector<std::string> label_names;

    int num_classes() const { return static_cast<int>(label_names.size()); }
    int size() const { return static_cast<int>(docs.size()); }
};

// Partition of a set of indices into the documents of one target class and
// the rest, preserving relative order.
struct DatasetSplit {
    std::vector<int> retained;
    std::vector<int> deleted;
    int target_class = -1;
};

// Three-way train/val/test index partition.
struct TrainTestSplit {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

// Load a corpus from JSONL: one object per line, UTF-8, string fields
// "text" and "label". Malformed lines raise with the 1-based line number.
LabeledCorpus load_jsonl(const std::string& path);

// Load a corpus from CSV with header `text,label`, RFC 4180 quoting.
LabeledCorpus load_csv(const std::string& path);

// Deterministic stratified split. Test/val sizes are rounded from the
// fractions and apportioned per label by largest remainder, so each label's
// share of every part stays within one document of its global share.
// Throws if any label would lose all its training documents.
TrainTestSplit split_train_test(const LabeledCorpus& corpus, double test_fraction,
                                double val_fraction, std::uint64_t seed);

// Split `indices` into documents of class c and the rest.
DatasetSplit split_by_class(const LabeledCorpus& corpus, std::span<const int> indices, int c);

}  // namespace lethe

#endif  // LETHE_CORPUS_HPP
