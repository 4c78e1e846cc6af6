#include "typoattack/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "typoattack/errors.hpp"

namespace typoattack {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string html_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Selection {
    std::vector<const AttackTrace*> decreases;
    std::vector<const AttackTrace*> increases;
};

Selection select_examples(const std::vector<AttackTrace>& traces, int per_direction) {
    Selection sel;
    for (const AttackTrace& t : traces) {
        if (t.steps.empty()) continue;  // nothing to show
        if (t.final_score < t.initial_score)
            sel.decreases.push_back(&t);
        else if (t.final_score > t.initial_score)
            sel.increases.push_back(&t);
    }
    auto by_delta_desc = [](const AttackTrace* a, const AttackTrace* b) {
        double da = std::abs(a->final_score - a->initial_score);
        double db = std::abs(b->final_score - b->initial_score);
        if (da != db) return da > db;
        return a->doc_id < b->doc_id;
    };
    std::sort(sel.decreases.begin(), sel.decreases.end(), by_delta_desc);
    std::sort(sel.increases.begin(), sel.increases.end(), by_delta_desc);
    if (static_cast<int>(sel.decreases.size()) > per_direction)
        sel.decreases.resize(per_direction);
    if (static_cast<int>(sel.increases.size()) > per_direction)
        sel.increases.resize(per_direction);
    return sel;
}

const Document& find_doc(const std::vector<Document>& corpus,
                         const std::map<std::string, std::size_t>& index,
                         const std::string& doc_id) {
    auto it = index.find(doc_id);
    if (it == index.end())
        throw DataError("report: trace doc_id '" + doc_id + "' not found in corpus");
    return corpus[it->second];
}

const std::string& label_code(const LabelSpace& labels, int index) {
    if (index < 0 || index >= static_cast<int>(labels.index_to_code.size()))
        throw DataError("report: label index " + std::to_string(index) +
                        " outside the label space");
    return labels.index_to_code[index];
}

// Window of tokens around an edit with the edited token wrapped in markers.
std::string snippet(const std::vector<std::string>& tokens, int position, int window,
                    const std::string& open, const std::string& close, bool escape) {
    int n = static_cast<int>(tokens.size());
    int lo = std::max(0, position - window);
    int hi = std::min(n, position + window + 1);
    std::string out = lo > 0 ? "… " : "";
    for (int i = lo; i < hi; ++i) {
        if (i > lo) out += ' ';
        std::string tok = escape ? html_escape(tokens[i]) : tokens[i];
        if (i == position)
            out += open + tok + close;
        else
            out += tok;
    }
    if (hi < n) out += " …";
    return out;
}

std::string label_list(const std::vector<int>& top, const std::set<int>& truth,
                       const LabelSpace& labels, const std::string& open,
                       const std::string& close, bool escape) {
    std::string out;
    for (std::size_t i = 0; i < top.size(); ++i) {
        if (i > 0) out += ", ";
        std::string code = label_code(labels, top[i]);
        if (escape) code = html_escape(code);
        if (truth.count(top[i]))
            out += open + code + close;
        else
            out += code;
    }
    return out;
}

}  // namespace

std::string render_report_markdown(const std::vector<AttackTrace>& traces,
                                   const std::vector<Document>& corpus,
                                   const LabelSpace& labels,
                                   const ReportOptions& options) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < corpus.size(); ++i) index[corpus[i].doc_id] = i;
    Selection sel = select_examples(traces, options.top_per_direction);

    std::string out = "# Typo attack report\n\n";
    if (!traces.empty()) {
        double before = 0.0, after = 0.0;
        for (const AttackTrace& t : traces) {
            before += t.initial_score;
            after += t.final_score;
        }
        out += "Documents attacked: " + std::to_string(traces.size()) +
               ". Mean precision@5: " + num(before / traces.size()) + " → " +
               num(after / traces.size()) + ".\n\n";
    }
    out += "Bold tokens are the injected typos; bold labels are part of the ground truth.\n";

    auto render_doc = [&](const AttackTrace& t) {
        const Document& doc = find_doc(corpus, index, t.doc_id);
        out += "\n### " + t.doc_id + " (" + num(t.initial_score) + " → " +
               num(t.final_score) + ", " + std::to_string(t.steps.size()) +
               " edit" + (t.steps.size() == 1 ? "" : "s") + ")\n\n";
        for (const AttackStep& s : t.steps) {
            out += "- `" + s.original + "` → `" + s.replacement + "` (" +
                   typo_op_name(s.op) + " at " + std::to_string(s.position) +
                   "), score " + num(s.score_before) + " → " + num(s.score_after) +
                   "\n";
            out += "  - before: " +
                   snippet(t.initial_tokens, s.position, options.context_window,
                           "**", "**", false) +
                   "\n";
            out += "  - after: " +
                   snippet(t.final_tokens, s.position, options.context_window,
                           "**", "**", false) +
                   "\n";
        }
        out += "\nTop-5 before: " +
               label_list(t.initial_top, doc.labels, labels, "**", "**", false) + "\n";
        out += "\nTop-5 after: " +
               label_list(t.final_top, doc.labels, labels, "**", "**", false) + "\n";
    };

    out += "\n## Largest precision drops\n";
    if (sel.decreases.empty()) out += "\nNone.\n";
    for (const AttackTrace* t : sel.decreases) render_doc(*t);
    out += "\n## Precision increases\n";
    if (sel.increases.empty()) out += "\nNone.\n";
    for (const AttackTrace* t : sel.increases) render_doc(*t);
    return out;
}

std::string render_report_html(const std::vector<AttackTrace>& traces,
                               const std::vector<Document>& corpus,
                               const LabelSpace& labels,
                               const ReportOptions& options) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < corpus.size(); ++i) index[corpus[i].doc_id] = i;
    Selection sel = select_examples(traces, options.top_per_direction);

    std::string out =
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n"
        "<title>Typo attack report</title>\n<style>\n"
        "body { font-family: sans-serif; max-width: 60em; margin: 2em auto; }\n"
        "mark { background: #fde2e2; font-weight: bold; }\n"
        ".truth { color: #0645ad; font-weight: bold; }\n"
        ".snippet { color: #444; margin-left: 1.5em; }\n"
        "</style></head>\n<body>\n<h1>Typo attack report</h1>\n";
    if (!traces.empty()) {
        double before = 0.0, after = 0.0;
        for (const AttackTrace& t : traces) {
            before += t.initial_score;
            after += t.final_score;
        }
        out += "<p>Documents attacked: " + std::to_string(traces.size()) +
               ". Mean precision@5: " + num(before / traces.size()) + " → " +
               num(after / traces.size()) + ".</p>\n";
    }
    out += "<p>Marked tokens are the injected typos; "
           "<span class=\"truth\">colored labels</span> are part of the ground "
           "truth.</p>\n";

    auto render_doc = [&](const AttackTrace& t) {
        const Document& doc = find_doc(corpus, index, t.doc_id);
        out += "<h3>" + html_escape(t.doc_id) + " (" + num(t.initial_score) + " → " +
               num(t.final_score) + ", " + std::to_string(t.steps.size()) +
               " edit" + (t.steps.size() == 1 ? "" : "s") + ")</h3>\n<ul>\n";
        for (const AttackStep& s : t.steps) {
            out += "<li><code>" + html_escape(s.original) + "</code> → <code>" +
                   html_escape(s.replacement) + "</code> (" + typo_op_name(s.op) +
                   " at " + std::to_string(s.position) + "), score " +
                   num(s.score_before) + " → " + num(s.score_after) + "\n";
            out += "<div class=\"snippet\">before: " +
                   snippet(t.initial_tokens, s.position, options.context_window,
                           "<mark>", "</mark>", true) +
                   "</div>\n";
            out += "<div class=\"snippet\">after: " +
                   snippet(t.final_tokens, s.position, options.context_window,
                           "<mark>", "</mark>", true) +
                   "</div></li>\n";
        }
        out += "</ul>\n<p>Top-5 before: " +
               label_list(t.initial_top, doc.labels, labels,
                          "<span class=\"truth\">", "</span>", true) +
               "</p>\n<p>Top-5 after: " +
               label_list(t.final_top, doc.labels, labels,
                          "<span class=\"truth\">", "</span>", true) +
               "</p>\n";
    };

    out += "<h2>Largest precision drops</h2>\n";
    if (sel.decreases.empty()) out += "<p>None.</p>\n";
    for (const AttackTrace* t : sel.decreases) render_doc(*t);
    out += "<h2>Precision increases</h2>\n";
    if (sel.increases.empty()) out += "<p>None.</p>\n";
    for (const AttackTrace* t : sel.increases) render_doc(*t);
    out += "</body></html>\n";
    return out;
}

}  // namespace typoattack
