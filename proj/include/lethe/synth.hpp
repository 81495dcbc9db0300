#pragma once

// Synthetic labeled corpus for desk-scale experiments: per-class signature
// vocabularies with adjacent-class bleed, a shared common pool, and a long
// tail of near-unique words that gives overfitted models a membership
// signal without skewing document mass between members and non-members.

#include <cstdint>

#include "lethe/corpus.hpp"

namespace lethe {

struct SynthConfig {
    int num_classes = 4;
    int docs_per_class = 500;
    int signature_pool = 80;  // words per class signature
    int shared_pool = 120;    // corpus-wide common words
    int tail_pool = 400;      // rare-word pool (per class when class_tails)
    int signature_draws = 7;  // per document
    int shared_draws = 10;
    int tail_draws = 4;
    bool class_tails = true;     // give each class its own tail pool
    double neighbor_mix = 0.45;  // chance a signature draw comes from another class
};

// Deterministic per seed. Labels are "topic00".."topic{K-1}", ids aligned
// with lexicographic order. Documents are grouped by class.
LabeledCorpus make_synthetic_corpus(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace lethe
