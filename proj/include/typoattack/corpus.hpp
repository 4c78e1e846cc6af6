#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "typoattack/hash.hpp"

namespace typoattack {

// One line of a raw corpus file: free text plus its code annotations.
struct RawRecord {
    std::string doc_id;
    std::string patient_id;
    std::string text;
    std::set<std::string> labels;
};

// A preprocessed document. Tokens are kept as strings rather than ids so
// that out-of-vocabulary replacements can be injected later; id encoding
// happens at the model boundary.
struct Document {
    std::string doc_id;
    std::string patient_id;
    std::vector<std::string> tokens;  // lowercase, each with >= 1 alphabetic char
    std::set<int> labels;             // indices into a LabelSpace, non-empty
};

// Token <-> id map with reserved pad and unk entries. Lookup is total:
// any unmapped string resolves to the unk id.
class Vocabulary {
public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr const char* kPadToken = "<PAD>";
    static constexpr const char* kUnkToken = "<UNK>";

    Vocabulary();

    int lookup(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? kUnkId : it->second;
    }
    bool contains(const std::string& token) const {
        return token_to_id_.count(token) != 0;
    }
    const std::string& token(int id) const { return id_to_token_.at(id); }
    long count(int id) const { return counts_.at(id); }
    int size() const { return static_cast<int>(id_to_token_.size()); }
    int min_count() const { return min_count_; }

    // Ids beyond pad/unk are assigned by descending count, ties by
    // ascending token, so the serialized form is order independent.
    static Vocabulary from_counts(const std::map<std::string, long>& counts,
                                  int min_count);

    // Text form: one "token<TAB>count" line per entry, <PAD> then <UNK> first.
    std::string serialize() const;
    static Vocabulary deserialize(const std::string& content);
    std::uint64_t fingerprint() const { return fnv1a64(serialize()); }

private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
    std::vector<long> counts_;
    int min_count_ = 3;
};

// The top-L most frequent codes, index 0 the most frequent. Ties are broken
// by ascending code string.
struct LabelSpace {
    std::vector<std::string> index_to_code;
    std::vector<long> counts;  // by index
    std::map<std::string, int> code_to_index;

    int size() const { return static_cast<int>(index_to_code.size()); }
    std::optional<int> index_of(const std::string& code) const;
    std::set<int> project(const std::set<std::string>& codes) const;

    std::string serialize() const;  // "code<TAB>count" lines in index order
    static LabelSpace deserialize(const std::string& content);
};

// Patient-level split assignment: a pure function of (salt, patient_id).
struct SplitSpec {
    double train_frac = 0.78;
    double val_frac = 0.11;
    double test_frac = 0.11;
    std::uint64_t salt = 0;

    void validate() const;  // fractions must sum to 1 within 1e-9
};

struct SplitResult {
    std::vector<RawRecord> train, val, test;
};

// Split on runs of non-alphanumeric characters, lowercase, and drop tokens
// without any alphabetic character. Multi-byte UTF-8 sequences act as
// delimiters. Standalone numbers are dropped, digit-bearing tokens like
// "2x" survive.
std::vector<std::string> tokenize(const std::string& text);

// One record per patient id: texts joined by a single space in input order,
// label sets unioned, doc_id of the first record kept.
std::vector<RawRecord> merge_by_patient(const std::vector<RawRecord>& records);

// Frequency counted once per record containing the code. Throws DataError
// when fewer than num_labels distinct codes exist.
LabelSpace build_label_space(const std::vector<RawRecord>& records, int num_labels);

// Counts over training token sequences only; tokens below min_count are
// excluded (they will resolve to unk at lookup time).
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& train_token_lists,
                            int min_count = 3);

// Tokenize, project labels into the label space, and drop documents that end
// up with no in-space label (or no tokens at all).
std::vector<Document> filter_and_encode(const std::vector<RawRecord>& records,
                                        const LabelSpace& labels);

// Deterministic patient-level split via unit_hash(salt, patient_id) compared
// against cumulative fractions.
SplitResult split(const std::vector<RawRecord>& records, const SplitSpec& spec);

// JSON-lines corpus io. Raw schema:
//   {"doc_id": str, "patient_id": str, "text": str, "labels": [str, ...]}
// Processed schema swaps text for tokens and string labels for indices.
std::vector<RawRecord> read_raw_jsonl(const std::string& path);
void write_raw_jsonl(const std::string& path, const std::vector<RawRecord>& records);
std::vector<Document> read_documents_jsonl(const std::string& path);
void write_documents_jsonl(const std::string& path, const std::vector<Document>& docs);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace typoattack
