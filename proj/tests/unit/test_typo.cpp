#include "doctest.h"

#include <algorithm>
#include <set>

#include "../common/temp_dir.hpp"
#include "typoattack/corpus.hpp"
#include "typoattack/errors.hpp"
#include "typoattack/typo.hpp"

using namespace typoattack;

namespace {

std::set<std::string> strings_of(const std::vector<PerturbationCandidate>& cands) {
    std::set<std::string> out;
    for (const auto& c : cands) out.insert(c.new_token);
    return out;
}

}  // namespace

TEST_CASE("qwerty adjacency matches the staggered layout") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    CHECK(kb.neighbors('a') == "qswz");
    CHECK(kb.adjacent('i', 'o'));
    CHECK(kb.adjacent('u', '8'));
    CHECK(kb.adjacent('q', 'w'));
    CHECK(kb.adjacent('q', '1'));
    CHECK(!kb.adjacent('q', 'z'));
    CHECK(!kb.adjacent('a', 'a'));
    CHECK(kb.neighbors('0') == "9op");  // sorted ascii: digits before letters
}

TEST_CASE("qwerty adjacency is symmetric and irreflexive over all 36 keys") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (char a : alphabet) {
        CHECK(!kb.adjacent(a, a));
        for (char b : alphabet) CHECK(kb.adjacent(a, b) == kb.adjacent(b, a));
        CHECK(!kb.neighbors(a).empty());
    }
}

TEST_CASE("keyboard json round-trips and is validated") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    KeyboardMap back = KeyboardMap::from_json_text(kb.to_json_text());
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (char a : alphabet) CHECK(back.neighbors(a) == kb.neighbors(a));

    CHECK_THROWS_AS(KeyboardMap::from_json_text("{\"adjacency\":{\"a\":\"b\"}}"),
                    DataError);  // asymmetric
    CHECK_THROWS_AS(KeyboardMap::from_json_text("{\"adjacency\":{\"a\":\"a\"}}"),
                    DataError);  // self-adjacent
    CHECK_THROWS_AS(KeyboardMap::from_json_text("{\"adjacency\":{\"A\":\"b\"}}"),
                    DataError);  // outside alphabet
    CHECK_THROWS_AS(KeyboardMap::from_json_text("not json"), DataError);

    TempDir tmp;
    write_text_file(tmp.file("kb.json"), kb.to_json_text());
    KeyboardMap loaded = KeyboardMap::load(tmp.file("kb.json"));
    CHECK(loaded.neighbors('a') == "qswz");
}

TEST_CASE("hike produces the documented example typos") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    OpsMask all;
    auto cands = generate_candidates("hike", all, kb);
    auto strings = strings_of(cands);
    CHECK(strings.count("hlike"));  // insert
    CHECK(strings.count("hke"));    // delete
    CHECK(strings.count("hkie"));   // swap
    CHECK(strings.count("hoke"));   // replace, o neighbors i
    CHECK(!strings.count("hike"));  // original never a candidate
    for (const auto& c : cands) {
        CHECK(damerau_levenshtein("hike", c.new_token) == 1);
        CHECK(!c.new_token.empty());
    }
    // deduplicated by resulting string
    CHECK(strings.size() == cands.size());
    CHECK(static_cast<int>(cands.size()) == count_candidates("hike", all, kb));
}

TEST_CASE("candidate enumeration is deterministic and ordered by op") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    OpsMask all;
    auto a = generate_candidates("nurse", all, kb);
    auto b = generate_candidates("nurse", all, kb);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].new_token == b[i].new_token);
        CHECK(a[i].op == b[i].op);
    }
    // all inserts precede all deletes, etc.
    std::vector<int> op_order;
    for (const auto& c : a) op_order.push_back(static_cast<int>(c.op));
    CHECK(std::is_sorted(op_order.begin(), op_order.end()));
}

TEST_CASE("single-character and degenerate tokens") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    OpsMask del_only{false, true, false, false};
    CHECK(generate_candidates("a", del_only, kb).empty());
    OpsMask swap_only{false, false, true, false};
    CHECK(generate_candidates("aa", swap_only, kb).empty());
    auto ab = generate_candidates("ab", swap_only, kb);
    REQUIRE(ab.size() == 1);
    CHECK(ab[0].new_token == "ba");
    CHECK(count_candidates("ab", swap_only, kb) == 1);
    OpsMask all;
    CHECK_THROWS_AS(generate_candidates("", all, kb), std::invalid_argument);
    CHECK_THROWS_AS(count_candidates("", all, kb), std::invalid_argument);
}

TEST_CASE("delete candidates are reversible by an insert") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    OpsMask del_only{false, true, false, false};
    OpsMask ins_only{true, false, false, false};
    for (const std::string word : {"hike", "breath", "x2y"}) {
        for (const auto& d : generate_candidates(word, del_only, kb)) {
            auto inserts = strings_of(generate_candidates(d.new_token, ins_only, kb));
            CHECK(inserts.count(word));
        }
    }
}

TEST_CASE("flanking-neighbor policy restricts inserts") {
    KeyboardMap kb = KeyboardMap::default_qwerty();
    OpsMask ins_only{true, false, false, false};
    auto free_inserts =
        strings_of(generate_candidates("hike", ins_only, kb, InsertPolicy::any_character));
    auto strict_inserts = strings_of(
        generate_candidates("hike", ins_only, kb, InsertPolicy::flanking_neighbors));
    CHECK(free_inserts.count("hlike"));
    // 'l' neighbors neither 'h' nor 'i', so the strict policy rejects it.
    CHECK(!strict_inserts.count("hlike"));
    CHECK(strict_inserts.count("huike"));  // 'u' neighbors both
    for (const auto& s : strict_inserts) CHECK(free_inserts.count(s));
    CHECK(strict_inserts.size() < free_inserts.size());
}

TEST_CASE("damerau-levenshtein distance basics") {
    CHECK(damerau_levenshtein("hike", "hike") == 0);
    CHECK(damerau_levenshtein("hike", "hoke") == 1);
    CHECK(damerau_levenshtein("ab", "ba") == 1);       // transposition is one edit
    CHECK(damerau_levenshtein("abc", "cab") == 2);
    CHECK(damerau_levenshtein("kitten", "sitting") == 3);
    CHECK(damerau_levenshtein("", "ab") == 2);
    CHECK(damerau_levenshtein("intubated", "int8bated") == 1);
}

TEST_CASE("ops parsing round-trips") {
    OpsMask all = parse_ops("all");
    CHECK(all.insert);
    CHECK(all.del);
    CHECK(all.swap);
    CHECK(all.replace);
    OpsMask some = parse_ops("delete,replace");
    CHECK(!some.insert);
    CHECK(some.del);
    CHECK(!some.swap);
    CHECK(some.replace);
    CHECK(format_ops(some) == "delete,replace");
    CHECK(format_ops(all) == "all");
    CHECK(format_ops(parse_ops(format_ops(some))) == "delete,replace");
    CHECK_THROWS_AS(parse_ops("teleport"), DataError);
    CHECK_THROWS_AS(parse_ops(""), DataError);
}
