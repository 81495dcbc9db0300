// Writes the bundled synthetic topic corpus as JSONL. Deterministic for a
// given seed and shape, so the checked-in fixture can be regenerated.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "lethe/serialize.hpp"
#include "lethe/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate the synthetic topic corpus (JSONL)"};
    std::string out_path = "synth.jsonl";
    lethe::SynthConfig cfg;
    std::uint64_t seed = 0;
    app.add_option("-o,--output", out_path, "output JSONL path");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--classes", cfg.num_classes, "number of topic classes");
    app.add_option("--docs-per-class", cfg.docs_per_class, "documents per class");
    app.add_option("--signature-pool", cfg.signature_pool, "signature words per class");
    app.add_option("--shared-pool", cfg.shared_pool, "shared common words");
    app.add_option("--tail-pool", cfg.tail_pool, "rare-word pool size");
    app.add_option("--signature-draws", cfg.signature_draws, "signature draws per doc");
    app.add_option("--shared-draws", cfg.shared_draws, "shared draws per doc");
    app.add_option("--tail-draws", cfg.tail_draws, "tail draws per doc");
    app.add_option("--neighbor-mix", cfg.neighbor_mix, "cross-class signature bleed");
    app.add_flag("--class-tails,!--shared-tails", cfg.class_tails, "per-class tail pools");

    CLI11_PARSE(app, argc, argv);
    if (cfg.num_classes < 3 || cfg.docs_per_class < 4) {
        std::fprintf(stderr, "error: need at least 3 classes and 4 docs per class\n");
        return 1;
    }

    try {
        const lethe::LabeledCorpus corpus = lethe::make_synthetic_corpus(cfg, seed);
        std::string out;
        for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
            nlohmann::json line;
            line["text"] = corpus.docs[i];
            line["label"] = corpus.label_names[corpus.labels[i]];
            out += line.dump() + "\n";
        }
        lethe::write_text_file(out_path, out);
        std::printf("wrote %zu documents, %d classes -> %s\n", corpus.docs.size(),
                    corpus.num_classes(), out_path.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
