#include "doctest.h"

#include <string>
#include <vector>

#include "typoattack/errors.hpp"
#include "typoattack/report.hpp"

using namespace typoattack;

namespace {

LabelSpace six_labels() {
    LabelSpace ls;
    for (int i = 0; i < 6; ++i) {
        char code[8];
        std::snprintf(code, sizeof(code), "c%02d", i);
        ls.index_to_code.push_back(code);
        ls.counts.push_back(10 - i);
        ls.code_to_index[code] = i;
    }
    return ls;
}

AttackTrace drop_trace() {
    AttackTrace t;
    t.doc_id = "docA";
    t.budget = 3;
    t.initial_tokens = {"one", "two",   "three", "four", "five",
                        "six", "seven", "eight", "nine", "ten"};
    t.final_tokens = t.initial_tokens;
    t.final_tokens[5] = "sx";
    t.initial_score = 0.8;
    t.final_score = 0.2;
    t.initial_top = {0, 1, 2, 3, 4};
    t.final_top = {2, 3, 4, 5, 0};
    AttackStep s;
    s.iteration = 0;
    s.position = 5;
    s.original = "six";
    s.replacement = "sx";
    s.op = TypoOp::Delete;
    s.score_before = 0.8;
    s.score_after = 0.2;
    t.steps = {s};
    return t;
}

std::vector<Document> corpus_for(const std::vector<AttackTrace>& traces) {
    std::vector<Document> docs;
    for (const AttackTrace& t : traces) {
        bool present = false;
        for (const Document& d : docs) present |= d.doc_id == t.doc_id;
        if (!present)
            docs.push_back(Document{t.doc_id, t.doc_id, t.initial_tokens, {0, 1}});
    }
    return docs;
}

}  // namespace

TEST_CASE("markdown report shows edits in context with truth labels marked") {
    AttackTrace drop = drop_trace();
    std::vector<AttackTrace> traces = {drop};
    std::vector<Document> corpus = corpus_for(traces);
    std::string md = render_report_markdown(traces, corpus, six_labels());

    CHECK(md.find("# Typo attack report") == 0);
    CHECK(md.find("Documents attacked: 1. Mean precision@5: 0.80 → 0.20.") !=
          std::string::npos);
    CHECK(md.find("## Largest precision drops") != std::string::npos);
    CHECK(md.find("### docA (0.80 → 0.20, 1 edit)") != std::string::npos);
    CHECK(md.find("`six` → `sx` (delete at 5), score 0.80 → 0.20") !=
          std::string::npos);
    // window of 4 around position 5 clips the first token only
    CHECK(md.find("… two three four five **six** seven eight nine ten") !=
          std::string::npos);
    CHECK(md.find("**sx**") != std::string::npos);
    // doc truth is {0, 1}: those codes are bold in the top-k lists
    CHECK(md.find("Top-5 before: **c00**, **c01**, c02, c03, c04") !=
          std::string::npos);
    CHECK(md.find("Top-5 after: c02, c03, c04, c05, **c00**") != std::string::npos);
    // no trace gained precision
    CHECK(md.find("## Precision increases\n\nNone.") != std::string::npos);
}

TEST_CASE("report orders by magnitude and respects the per-direction limit") {
    AttackTrace big = drop_trace();  // delta 0.6
    AttackTrace small = drop_trace();
    small.doc_id = "docB";
    small.initial_score = 0.4;
    small.final_score = 0.2;  // delta 0.2
    AttackTrace mid = drop_trace();
    mid.doc_id = "docC";
    mid.initial_score = 0.6;
    mid.final_score = 0.2;  // delta 0.4
    AttackTrace up = drop_trace();
    up.doc_id = "docU";
    up.initial_score = 0.2;
    up.final_score = 0.4;

    std::vector<AttackTrace> traces = {small, up, big, mid};
    std::vector<Document> corpus = corpus_for(traces);

    std::string md = render_report_markdown(traces, corpus, six_labels());
    auto posA = md.find("### docA");
    auto posC = md.find("### docC");
    auto posB = md.find("### docB");
    REQUIRE(posA != std::string::npos);
    REQUIRE(posC != std::string::npos);
    REQUIRE(posB != std::string::npos);
    CHECK(posA < posC);
    CHECK(posC < posB);
    CHECK(md.find("### docU") != std::string::npos);
    CHECK(md.find("## Precision increases\n\nNone.") == std::string::npos);

    ReportOptions limited;
    limited.top_per_direction = 2;
    std::string capped = render_report_markdown(traces, corpus, six_labels(), limited);
    CHECK(capped.find("### docA") != std::string::npos);
    CHECK(capped.find("### docC") != std::string::npos);
    CHECK(capped.find("### docB") == std::string::npos);  // smallest drop cut
}

TEST_CASE("traces without steps never appear as examples") {
    AttackTrace silent = drop_trace();
    silent.steps.clear();  // big delta but nothing was edited
    std::vector<AttackTrace> traces = {silent};
    std::vector<Document> corpus = corpus_for(traces);
    std::string md = render_report_markdown(traces, corpus, six_labels());
    CHECK(md.find("### docA") == std::string::npos);
    CHECK(md.find("## Largest precision drops\n\nNone.") != std::string::npos);
    // the summary line still counts the trace
    CHECK(md.find("Documents attacked: 1.") != std::string::npos);
}

TEST_CASE("report rejects traces pointing at unknown documents") {
    std::vector<AttackTrace> traces = {drop_trace()};
    std::vector<Document> corpus;  // empty: docA unresolvable
    CHECK_THROWS_AS(render_report_markdown(traces, corpus, six_labels()), DataError);
    CHECK_THROWS_AS(render_report_html(traces, corpus, six_labels()), DataError);
}

TEST_CASE("html report marks edits and escapes markup") {
    AttackTrace t = drop_trace();
    t.initial_tokens[5] = "si<x";
    t.final_tokens[5] = "s<x";
    t.steps[0].original = "si<x";
    t.steps[0].replacement = "s<x";
    std::vector<AttackTrace> traces = {t};
    std::vector<Document> corpus = corpus_for(traces);
    std::string html = render_report_html(traces, corpus, six_labels());

    CHECK(html.find("<h1>Typo attack report</h1>") != std::string::npos);
    CHECK(html.find("<h2>Largest precision drops</h2>") != std::string::npos);
    CHECK(html.find("<mark>si&lt;x</mark>") != std::string::npos);
    CHECK(html.find("<mark>s&lt;x</mark>") != std::string::npos);
    CHECK(html.find("<code>si&lt;x</code> → <code>s&lt;x</code>") !=
          std::string::npos);
    CHECK(html.find("<span class=\"truth\">c00</span>") != std::string::npos);
    CHECK(html.find("si<x") == std::string::npos);  // raw token never leaks
}
