#include "lethe/synth.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "lethe/rng.hpp"

namespace lethe {

namespace {

std::string padded(int value) {
    std::string s = std::to_string(value);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

LabeledCorpus make_synthetic_corpus(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.num_classes < 2 || cfg.num_classes > 99) {
        throw std::invalid_argument("make_synthetic_corpus: num_classes out of range");
    }
    if (cfg.docs_per_class < 1 || cfg.signature_pool < 1 || cfg.shared_pool < 1 ||
        cfg.tail_pool < 1 || cfg.neighbor_mix < 0.0 || cfg.neighbor_mix > 1.0) {
        throw std::invalid_argument("make_synthetic_corpus: bad configuration");
    }

    Rng rng(seed);
    LabeledCorpus corpus;
    for (int k = 0; k < cfg.num_classes; ++k) corpus.label_names.push_back("topic" + padded(k));

    // Class 0 is a composite hub: its documents borrow signature words from
    // every other class, while its own signature never appears elsewhere.
    // That makes it the most entangled deletion target. The remaining
    // classes bleed among themselves, which keeps them mutually confusable.
    const auto bleed_source = [&](int k) -> int {
        if (k == 0) return 1 + static_cast<int>(rng.uniform_index(cfg.num_classes - 1));
        if (cfg.num_classes <= 2) return k;
        const int pick = 1 + static_cast<int>(rng.uniform_index(cfg.num_classes - 2));
        return pick < k ? pick : pick + 1;
    };

    std::vector<int> next_tail(cfg.class_tails ? cfg.num_classes : 1, 0);
    for (int k = 0; k < cfg.num_classes; ++k) {
        for (int i = 0; i < cfg.docs_per_class; ++i) {
            std::string doc;
            for (int t = 0; t < cfg.signature_draws; ++t) {
                const int cls = rng.uniform_real() < cfg.neighbor_mix ? bleed_source(k) : k;
                const int w = static_cast<int>(rng.uniform_index(cfg.signature_pool));
                if (!doc.empty()) doc += ' ';
                doc += "sig" + padded(cls) + "w" + std::to_string(w);
            }
            for (int t = 0; t < cfg.shared_draws; ++t) {
                const int w = static_cast<int>(rng.uniform_index(cfg.shared_pool));
                doc += " common" + std::to_string(w);
            }
            const int pool_id = cfg.class_tails ? k : 0;
            for (int t = 0; t < cfg.tail_draws; ++t) {
                // The first tail draw cycles deterministically so that low-df
                // words exist at every pool size; the rest are uniform.
                int w;
                if (t == 0) {
                    w = next_tail[pool_id];
                    next_tail[pool_id] = (next_tail[pool_id] + 1) % cfg.tail_pool;
                } else {
                    w = static_cast<int>(rng.uniform_index(cfg.tail_pool));
                }
                doc += cfg.class_tails ? " tail" + padded(k) + "x" + std::to_string(w)
                                       : " tail" + std::to_string(w);
            }
            corpus.docs.push_back(std::move(doc));
            corpus.labels.push_back(k);
        }
    }
    return corpus;
}

}  // namespace lethe
