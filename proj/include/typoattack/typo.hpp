#pragma once

#include <map>
#include <string>
#include <vector>

namespace typoattack {

// Character adjacency over [a-z0-9], symmetric and irreflexive.
class KeyboardMap {
public:
    // QWERTY rows 1234567890 / qwertyuiop / asdfghjkl / zxcvbnm with a
    // half-key stagger per row: neighbors are same-row adjacent columns plus
    // the two nearest staggered columns of the rows above and below.
    static KeyboardMap default_qwerty();

    static KeyboardMap from_json_text(const std::string& text);
    static KeyboardMap load(const std::string& path);
    std::string to_json_text() const;

    // Neighbors of c in ascending character order; empty for unknown chars.
    const std::string& neighbors(char c) const;
    bool adjacent(char a, char b) const;

    const std::map<char, std::string>& adjacency() const { return adj_; }

private:
    void add_edge(char a, char b);
    void validate() const;  // alphabet, symmetry, no self-adjacency

    std::map<char, std::string> adj_;
};

enum class TypoOp { Insert, Delete, Swap, Replace };

const char* typo_op_name(TypoOp op);
TypoOp typo_op_from_name(const std::string& name);

struct OpsMask {
    bool insert = true;
    bool del = true;
    bool swap = true;
    bool replace = true;

    static OpsMask none() { return {false, false, false, false}; }
    static OpsMask only(TypoOp op);
    bool any() const { return insert || del || swap || replace; }
};

// Comma-separated operator list, e.g. "insert,swap". "all" selects all four.
OpsMask parse_ops(const std::string& text);
std::string format_ops(const OpsMask& ops);

// By default the insert operator allows any character; the stricter policy
// limits inserts to keyboard neighbors of the flanking characters.
enum class InsertPolicy { any_character, flanking_neighbors };

// A single-edit variant of a token: Damerau-Levenshtein distance 1 from the
// original, never empty, never equal to the original.
struct PerturbationCandidate {
    TypoOp op;
    int position;
    std::string new_token;
};

// All single typos of a token, in deterministic order: insert, delete, swap,
// replace; within an operator by position, then by character. Duplicate
// result strings keep their first occurrence. Throws std::invalid_argument
// on an empty token.
std::vector<PerturbationCandidate> generate_candidates(
    const std::string& token, const OpsMask& ops, const KeyboardMap& keyboard,
    InsertPolicy insert_policy = InsertPolicy::any_character);

int count_candidates(const std::string& token, const OpsMask& ops,
                     const KeyboardMap& keyboard,
                     InsertPolicy insert_policy = InsertPolicy::any_character);

// Edit distance counting insertion, deletion, substitution and adjacent
// transposition as one edit each (optimal string alignment variant).
int damerau_levenshtein(const std::string& a, const std::string& b);

}  // namespace typoattack
