// Generates the keyword-separable benchmark corpus as raw JSONL.
#include <cstdio>
#include <stdexcept>

#include "CLI11.hpp"

#include "typoattack/corpus.hpp"
#include "typoattack/errors.hpp"
#include "typoattack/synthetic.hpp"

using namespace typoattack;

int main(int argc, char** argv) {
    CLI::App app{"Synthetic keyword-separable corpus generator"};
    SyntheticSpec spec;
    std::string out_path;
    app.add_option("--out", out_path, "Output raw corpus JSONL")->required();
    app.add_option("--docs", spec.num_docs, "Number of documents");
    app.add_option("--labels", spec.num_labels, "Number of labels");
    app.add_option("--truth", spec.truth_size, "Labels per document");
    app.add_option("--filler-vocab", spec.filler_vocab, "Distinct filler words");
    app.add_option("--min-fillers", spec.min_fillers, "Minimum fillers per document");
    app.add_option("--max-fillers", spec.max_fillers, "Maximum fillers per document");
    app.add_option("--seed", spec.seed, "Generator seed");
    app.add_option("--prefix", spec.id_prefix, "Document id prefix");

    try {
        app.parse(argc, argv);
        std::vector<RawRecord> records = make_synthetic_corpus(spec);
        write_raw_jsonl(out_path, records);
        std::printf("wrote %zu records to %s\n", records.size(), out_path.c_str());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
