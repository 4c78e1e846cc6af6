#pragma once

#include <map>
#include <string>
#include <vector>

#include "typoattack/attack.hpp"
#include "typoattack/corpus.hpp"

namespace typoattack {

struct ReportOptions {
    int top_per_direction = 3;  // documents shown per direction of change
    int context_window = 4;     // tokens of context around each edit
};

// Before/after presentation of the most affected documents: edited tokens
// emphasized in context, top-k label lists marked as in or out of the truth
// set. Traces without steps are never selected. Throws DataError when a
// trace references a doc_id missing from the corpus.
std::string render_report_markdown(const std::vector<AttackTrace>& traces,
                                   const std::vector<Document>& corpus,
                                   const LabelSpace& labels,
                                   const ReportOptions& options = {});

std::string render_report_html(const std::vector<AttackTrace>& traces,
                               const std::vector<Document>& corpus,
                               const LabelSpace& labels,
                               const ReportOptions& options = {});

}  // namespace typoattack
