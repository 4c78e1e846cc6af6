#include "typoattack/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace typoattack {

namespace {

std::string two_letter(int index) {
    std::string s;
    s += static_cast<char>('a' + index % 26);
    if (index >= 26) s += static_cast<char>('a' + index / 26 - 1);
    return s;
}

}  // namespace

std::string synthetic_keyword(int label) {
    return "key" + two_letter(label);
}

std::string synthetic_label_code(int label) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "c%02d", label);
    return buf;
}

std::vector<RawRecord> make_synthetic_corpus(const SyntheticSpec& spec) {
    if (spec.num_docs < 1) throw std::invalid_argument("synthetic: num_docs >= 1");
    if (spec.num_labels < 1 || spec.num_labels > 26 * 27)
        throw std::invalid_argument("synthetic: num_labels out of range");
    if (spec.truth_size < 1 || spec.truth_size > spec.num_labels)
        throw std::invalid_argument("synthetic: truth_size out of range");
    if (spec.filler_vocab < 1 || spec.filler_vocab > 26 * 27)
        throw std::invalid_argument("synthetic: filler_vocab out of range");
    if (spec.min_fillers < 1 || spec.min_fillers > spec.max_fillers)
        throw std::invalid_argument("synthetic: bad filler count range");

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> filler_count(spec.min_fillers, spec.max_fillers);
    std::uniform_int_distribution<int> filler_word(0, spec.filler_vocab - 1);

    std::vector<int> all_labels(spec.num_labels);
    std::iota(all_labels.begin(), all_labels.end(), 0);

    std::vector<RawRecord> records;
    records.reserve(spec.num_docs);
    for (int i = 0; i < spec.num_docs; ++i) {
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "%04d", i);
        RawRecord rec;
        rec.doc_id = spec.id_prefix + "-" + suffix;
        // digits first: the split hash diffuses leading bytes much better
        // than trailing ones, and patient ids are its only input
        rec.patient_id = "p" + std::string(suffix) + "-" + spec.id_prefix;

        std::shuffle(all_labels.begin(), all_labels.end(), rng);
        std::vector<int> truth(all_labels.begin(), all_labels.begin() + spec.truth_size);
        std::sort(truth.begin(), truth.end());

        std::vector<std::string> tokens;
        int fillers = filler_count(rng);
        tokens.reserve(fillers + spec.truth_size);
        for (int t = 0; t < fillers; ++t)
            tokens.push_back("fw" + two_letter(filler_word(rng)));
        for (int label : truth) {
            std::uniform_int_distribution<std::size_t> at(0, tokens.size());
            tokens.insert(tokens.begin() + at(rng), synthetic_keyword(label));
            rec.labels.insert(synthetic_label_code(label));
        }

        std::string text;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (t > 0) text += ' ';
            text += tokens[t];
        }
        rec.text = std::move(text);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace typoattack
