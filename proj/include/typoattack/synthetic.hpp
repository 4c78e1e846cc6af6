#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "typoattack/corpus.hpp"

namespace typoattack {

// Keyword-separable benchmark corpus: each label has one dedicated keyword
// token, each document contains the keyword of every one of its labels
// exactly once among filler words. The Bayes-optimal precision@5 is 1.0
// when truth_size >= 5, which makes the corpus a clean probe for both
// training quality and attack damage.
struct SyntheticSpec {
    int num_docs = 500;
    int num_labels = 10;
    int truth_size = 5;      // labels per document
    int filler_vocab = 60;   // distinct filler words
    int min_fillers = 25;    // filler tokens per document
    int max_fillers = 45;
    std::uint64_t seed = 0;
    std::string id_prefix = "doc";
};

std::string synthetic_keyword(int label);     // keyword token of label i
std::string synthetic_label_code(int label);  // code string of label i

std::vector<RawRecord> make_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace typoattack
