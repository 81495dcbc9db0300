#pragma once

// JSON artifact formats and content hashing. Every artifact carries a
// "format" tag and a version; loaders reject anything else. Doubles are
// written with shortest-round-trip formatting and keys are emitted in
// sorted order, so identical inputs produce byte-identical files.

#include <cstdint>
#include <string>
#include <string_view>

#include "lethe/corpus.hpp"
#include "lethe/softmax.hpp"
#include "lethe/tfidf.hpp"
#include "lethe/unlearn.hpp"

namespace lethe {

// FNV-1a 64-bit, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Hash of a file's raw bytes. Throws if the file cannot be read.
std::string file_hash(const std::string& path);

void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

void save_model(const ModelParams& model, const std::string& path,
                const std::string& vocab_hash);
ModelParams load_model(const std::string& path, std::string* vocab_hash = nullptr);

void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

void save_release(const Release& release, const std::string& path,
                  const std::string& vocab_hash);
Release load_release(const std::string& path, std::string* vocab_hash = nullptr);

// Split artifact: index partition plus the settings and dataset hash that
// produced it.
struct SplitArtifact {
    TrainTestSplit split;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
    double val_fraction = 0.0;
    std::string dataset_hash;
};

void save_split(const SplitArtifact& artifact, const std::string& path);
SplitArtifact load_split(const std::string& path);

// CG and timing diagnostics of one downweight, stored next to the release.
void save_update_log(const UnlearnUpdate& update, const std::string& path);

}  // namespace lethe
