#include "typoattack/typo.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

#include "typoattack/corpus.hpp"
#include "typoattack/errors.hpp"

namespace typoattack {

namespace {

constexpr const char* kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";

bool in_alphabet(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

const std::string kEmpty;

}  // namespace

KeyboardMap KeyboardMap::default_qwerty() {
    // Row r is offset half a key to the right of row r-1, so column c of one
    // row sits between columns c-1 and c of the next.
    static const char* kRows[] = {"1234567890", "qwertyuiop", "asdfghjkl", "zxcvbnm"};
    KeyboardMap map;
    for (int r = 0; r < 4; ++r) {
        const std::string row = kRows[r];
        for (int c = 0; c < static_cast<int>(row.size()); ++c) {
            if (c + 1 < static_cast<int>(row.size())) map.add_edge(row[c], row[c + 1]);
            if (r + 1 < 4) {
                const std::string below = kRows[r + 1];
                for (int cb : {c - 1, c})
                    if (cb >= 0 && cb < static_cast<int>(below.size()))
                        map.add_edge(row[c], below[cb]);
            }
        }
    }
    map.validate();
    return map;
}

void KeyboardMap::add_edge(char a, char b) {
    auto insert_sorted = [](std::string& s, char c) {
        auto pos = std::lower_bound(s.begin(), s.end(), c);
        if (pos == s.end() || *pos != c) s.insert(pos, c);
    };
    insert_sorted(adj_[a], b);
    insert_sorted(adj_[b], a);
}

void KeyboardMap::validate() const {
    for (const auto& [c, neighbors] : adj_) {
        if (!in_alphabet(c))
            throw DataError(std::string("keyboard map: character '") + c +
                            "' outside [a-z0-9]");
        for (char n : neighbors) {
            if (!in_alphabet(n))
                throw DataError(std::string("keyboard map: neighbor '") + n +
                                "' outside [a-z0-9]");
            if (n == c)
                throw DataError(std::string("keyboard map: '") + c +
                                "' adjacent to itself");
            if (!adjacent(n, c))
                throw DataError(std::string("keyboard map: asymmetric pair '") + c +
                                "'/'" + n + "'");
        }
    }
}

const std::string& KeyboardMap::neighbors(char c) const {
    auto it = adj_.find(c);
    return it == adj_.end() ? kEmpty : it->second;
}

bool KeyboardMap::adjacent(char a, char b) const {
    const std::string& n = neighbors(a);
    return std::binary_search(n.begin(), n.end(), b);
}

KeyboardMap KeyboardMap::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("adjacency") ||
        !j["adjacency"].is_object())
        throw DataError("keyboard map: expected {\"adjacency\": {...}}");
    KeyboardMap map;
    for (const auto& [key, value] : j["adjacency"].items()) {
        if (key.size() != 1 || !value.is_string())
            throw DataError("keyboard map: adjacency keys must be single characters "
                            "mapping to strings");
        std::string neighbors = value.get<std::string>();
        std::sort(neighbors.begin(), neighbors.end());
        neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());
        map.adj_[key[0]] = neighbors;
    }
    map.validate();
    return map;
}

KeyboardMap KeyboardMap::load(const std::string& path) {
    return from_json_text(read_text_file(path));
}

std::string KeyboardMap::to_json_text() const {
    nlohmann::json adjacency = nlohmann::json::object();
    for (const auto& [c, neighbors] : adj_) adjacency[std::string(1, c)] = neighbors;
    nlohmann::json j;
    j["adjacency"] = adjacency;
    return j.dump(2) + "\n";
}

const char* typo_op_name(TypoOp op) {
    switch (op) {
        case TypoOp::Insert: return "insert";
        case TypoOp::Delete: return "delete";
        case TypoOp::Swap: return "swap";
        case TypoOp::Replace: return "replace";
    }
    return "?";
}

TypoOp typo_op_from_name(const std::string& name) {
    if (name == "insert") return TypoOp::Insert;
    if (name == "delete") return TypoOp::Delete;
    if (name == "swap") return TypoOp::Swap;
    if (name == "replace") return TypoOp::Replace;
    throw DataError("unknown typo operator '" + name + "'");
}

OpsMask OpsMask::only(TypoOp op) {
    OpsMask mask = none();
    switch (op) {
        case TypoOp::Insert: mask.insert = true; break;
        case TypoOp::Delete: mask.del = true; break;
        case TypoOp::Swap: mask.swap = true; break;
        case TypoOp::Replace: mask.replace = true; break;
    }
    return mask;
}

OpsMask parse_ops(const std::string& text) {
    if (text.empty()) throw DataError("empty typo operator list");
    if (text == "all") return OpsMask{};
    OpsMask mask = OpsMask::none();
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string item = text.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
            switch (typo_op_from_name(item)) {
                case TypoOp::Insert: mask.insert = true; break;
                case TypoOp::Delete: mask.del = true; break;
                case TypoOp::Swap: mask.swap = true; break;
                case TypoOp::Replace: mask.replace = true; break;
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (!mask.any()) throw DataError("no typo operators selected: '" + text + "'");
    return mask;
}

std::string format_ops(const OpsMask& ops) {
    if (ops.insert && ops.del && ops.swap && ops.replace) return "all";
    std::string out;
    auto append = [&](const char* name) {
        if (!out.empty()) out += ',';
        out += name;
    };
    if (ops.insert) append("insert");
    if (ops.del) append("delete");
    if (ops.swap) append("swap");
    if (ops.replace) append("replace");
    return out;
}

std::vector<PerturbationCandidate> generate_candidates(const std::string& token,
                                                       const OpsMask& ops,
                                                       const KeyboardMap& keyboard,
                                                       InsertPolicy insert_policy) {
    if (token.empty()) throw std::invalid_argument("generate_candidates: empty token");
    const int len = static_cast<int>(token.size());

    std::vector<PerturbationCandidate> candidates;
    std::unordered_set<std::string> seen;
    seen.insert(token);  // never propose the original
    auto push = [&](TypoOp op, int position, std::string&& result) {
        if (result.empty()) return;
        if (!seen.insert(result).second) return;
        candidates.push_back(PerturbationCandidate{op, position, std::move(result)});
    };

    if (ops.insert) {
        for (int pos = 0; pos <= len; ++pos) {
            for (const char* p = kAlphabet; *p; ++p) {
                char c = *p;
                if (insert_policy == InsertPolicy::flanking_neighbors) {
                    bool near_left = pos > 0 && keyboard.adjacent(token[pos - 1], c);
                    bool near_right = pos < len && keyboard.adjacent(token[pos], c);
                    if (!near_left && !near_right) continue;
                }
                std::string result = token;
                result.insert(result.begin() + pos, c);
                push(TypoOp::Insert, pos, std::move(result));
            }
        }
    }
    if (ops.del && len >= 2) {
        for (int pos = 0; pos < len; ++pos) {
            std::string result = token;
            result.erase(result.begin() + pos);
            push(TypoOp::Delete, pos, std::move(result));
        }
    }
    if (ops.swap) {
        for (int pos = 0; pos + 1 < len; ++pos) {
            if (token[pos] == token[pos + 1]) continue;
            std::string result = token;
            std::swap(result[pos], result[pos + 1]);
            push(TypoOp::Swap, pos, std::move(result));
        }
    }
    if (ops.replace) {
        for (int pos = 0; pos < len; ++pos) {
            for (char c : keyboard.neighbors(token[pos])) {
                std::string result = token;
                result[pos] = c;
                push(TypoOp::Replace, pos, std::move(result));
            }
        }
    }
    return candidates;
}

int count_candidates(const std::string& token, const OpsMask& ops,
                     const KeyboardMap& keyboard, InsertPolicy insert_policy) {
    return static_cast<int>(generate_candidates(token, ops, keyboard, insert_policy).size());
}

int damerau_levenshtein(const std::string& a, const std::string& b) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
    for (int i = 0; i <= n; ++i) d[i][0] = i;
    for (int j = 0; j <= m; ++j) d[0][j] = j;
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= m; ++j) {
            int cost = a[i - 1] == b[j - 1] ? 0 : 1;
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
            if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
                d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
        }
    }
    return d[n][m];
}

}  // namespace typoattack
