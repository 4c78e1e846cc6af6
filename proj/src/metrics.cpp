#include "typoattack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "typoattack/errors.hpp"

namespace typoattack {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_shape(const std::vector<std::vector<double>>& probs,
                 const std::vector<std::set<int>>& truths) {
    if (probs.empty()) throw std::invalid_argument("metrics: empty input");
    if (probs.size() != truths.size())
        throw std::invalid_argument("metrics: probs/truths size mismatch");
    std::size_t labels = probs.front().size();
    if (labels == 0) throw std::invalid_argument("metrics: zero labels");
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i].size() != labels)
            throw std::invalid_argument("metrics: ragged probability rows");
        for (int l : truths[i])
            if (l < 0 || l >= static_cast<int>(labels))
                throw std::invalid_argument("metrics: truth label out of range");
    }
}

double f1_from(const ConfusionCounts& c) {
    long denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

}  // namespace

std::vector<int> top_k_indices(std::span<const double> probs, int k) {
    const int L = static_cast<int>(probs.size());
    if (k < 1 || k > L)
        throw std::invalid_argument("top_k_indices: k must be in [1, num labels]");
    std::vector<int> order(L);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&probs](int a, int b) {
                          if (probs[a] != probs[b]) return probs[a] > probs[b];
                          return a < b;
                      });
    order.resize(k);
    return order;
}

F1Result f1_scores(const std::vector<std::vector<double>>& probs,
                   const std::vector<std::set<int>>& truths, double threshold) {
    check_shape(probs, truths);
    const int L = static_cast<int>(probs.front().size());
    F1Result result;
    result.per_label.assign(L, ConfusionCounts{});
    for (std::size_t i = 0; i < probs.size(); ++i) {
        for (int l = 0; l < L; ++l) {
            bool predicted = probs[i][l] >= threshold;
            bool actual = truths[i].count(l) > 0;
            if (predicted && actual)
                ++result.per_label[l].tp;
            else if (predicted)
                ++result.per_label[l].fp;
            else if (actual)
                ++result.per_label[l].fn;
        }
    }
    ConfusionCounts pooled;
    double macro_sum = 0.0;
    result.per_label_f1.resize(L);
    for (int l = 0; l < L; ++l) {
        result.per_label_f1[l] = f1_from(result.per_label[l]);
        macro_sum += result.per_label_f1[l];
        pooled.tp += result.per_label[l].tp;
        pooled.fp += result.per_label[l].fp;
        pooled.fn += result.per_label[l].fn;
    }
    result.macro_f1 = macro_sum / L;
    result.micro_f1 = f1_from(pooled);
    return result;
}

double roc_auc(std::span<const double> scores, const std::vector<char>& positives,
               bool* defined) {
    if (scores.size() != positives.size())
        throw std::invalid_argument("roc_auc: size mismatch");
    std::size_t n_pos = 0;
    for (char p : positives) n_pos += p ? 1 : 0;
    std::size_t n_neg = positives.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        if (defined) *defined = false;
        return kNaN;
    }
    if (defined) *defined = true;

    // Mann-Whitney with midranks: ties contribute 1/2 to each crossing pair.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (positives[order[t]]) rank_sum_pos += mid_rank;
        i = j;
    }
    double u = rank_sum_pos -
               static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AucResult auc_scores(const std::vector<std::vector<double>>& probs,
                     const std::vector<std::set<int>>& truths) {
    check_shape(probs, truths);
    const int L = static_cast<int>(probs.front().size());
    const std::size_t n = probs.size();
    AucResult result;
    result.per_label.assign(L, kNaN);

    std::vector<double> scores(n);
    std::vector<char> positives(n);
    double macro_sum = 0.0;
    int macro_count = 0;
    for (int l = 0; l < L; ++l) {
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = probs[i][l];
            positives[i] = truths[i].count(l) > 0 ? 1 : 0;
        }
        bool defined = false;
        double auc = roc_auc(scores, positives, &defined);
        if (defined) {
            result.per_label[l] = auc;
            macro_sum += auc;
            ++macro_count;
        } else {
            result.skipped_labels.push_back(l);
        }
    }
    if (macro_count > 0) {
        result.macro_auc = macro_sum / macro_count;
        result.macro_defined = true;
    } else {
        result.macro_auc = kNaN;
    }

    std::vector<double> pooled_scores;
    std::vector<char> pooled_positives;
    pooled_scores.reserve(n * L);
    pooled_positives.reserve(n * L);
    for (std::size_t i = 0; i < n; ++i)
        for (int l = 0; l < L; ++l) {
            pooled_scores.push_back(probs[i][l]);
            pooled_positives.push_back(truths[i].count(l) > 0 ? 1 : 0);
        }
    bool micro_defined = false;
    result.micro_auc = roc_auc(pooled_scores, pooled_positives, &micro_defined);
    result.micro_defined = micro_defined;
    return result;
}

double precision_at_k(const std::vector<std::vector<double>>& probs,
                      const std::vector<std::set<int>>& truths, int k) {
    check_shape(probs, truths);
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        std::vector<int> top = top_k_indices(probs[i], k);
        int hits = 0;
        for (int l : top)
            if (truths[i].count(l)) ++hits;
        total += static_cast<double>(hits) / k;
    }
    return total / static_cast<double>(probs.size());
}

EvalReport evaluate(const std::vector<std::vector<double>>& probs,
                    const std::vector<std::set<int>>& truths, double threshold,
                    int k) {
    F1Result f1 = f1_scores(probs, truths, threshold);
    AucResult auc = auc_scores(probs, truths);
    EvalReport report;
    report.macro_f1 = f1.macro_f1;
    report.micro_f1 = f1.micro_f1;
    report.macro_auc = auc.macro_auc;
    report.micro_auc = auc.micro_auc;
    report.precision_at_5 = precision_at_k(probs, truths, k);
    report.per_label_counts = std::move(f1.per_label);
    report.per_label_f1 = std::move(f1.per_label_f1);
    report.per_label_auc = std::move(auc.per_label);
    report.auc_skipped_labels = std::move(auc.skipped_labels);
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    json j;
    j["macro_f1"] = report.macro_f1;
    j["micro_f1"] = report.micro_f1;
    j["macro_auc"] = report.macro_auc;  // NaN serializes as null
    j["micro_auc"] = report.micro_auc;
    j["precision_at_5"] = report.precision_at_5;
    json per_label = json::array();
    for (std::size_t l = 0; l < report.per_label_f1.size(); ++l) {
        per_label.push_back({{"label", l},
                             {"tp", report.per_label_counts[l].tp},
                             {"fp", report.per_label_counts[l].fp},
                             {"fn", report.per_label_counts[l].fn},
                             {"f1", report.per_label_f1[l]},
                             {"auc", report.per_label_auc[l]}});
    }
    j["per_label"] = per_label;
    j["auc_skipped_labels"] = report.auc_skipped_labels;
    return j.dump(2) + "\n";
}

std::string format_eval_table(const EvalReport& report) {
    auto cell = [](double v) {
        char buf[32];
        if (std::isnan(v))
            std::snprintf(buf, sizeof(buf), "%8s", "n/a");
        else
            std::snprintf(buf, sizeof(buf), "%8.4f", v);
        return std::string(buf);
    };
    std::string out;
    out += "metric          value\n";
    out += "macro_f1     " + cell(report.macro_f1) + "\n";
    out += "micro_f1     " + cell(report.micro_f1) + "\n";
    out += "macro_auc    " + cell(report.macro_auc) + "\n";
    out += "micro_auc    " + cell(report.micro_auc) + "\n";
    out += "p@5          " + cell(report.precision_at_5) + "\n";
    if (!report.auc_skipped_labels.empty()) {
        out += "(auc skipped " + std::to_string(report.auc_skipped_labels.size()) +
               " degenerate label(s))\n";
    }
    return out;
}

SweepTable sweep_table(const std::vector<SweepCell>& cells) {
    if (cells.empty()) throw std::invalid_argument("sweep_table: no cells");
    SweepTable table;
    table.baseline = cells.front().mean_score_before;
    for (const SweepCell& cell : cells) {
        if (std::abs(cell.mean_score_before - table.baseline) > 1e-12)
            throw DataError("sweep cells disagree on the pre-attack baseline");
        if (std::find(table.budgets.begin(), table.budgets.end(), cell.budget) ==
            table.budgets.end())
            table.budgets.push_back(cell.budget);
        if (std::find(table.strategies.begin(), table.strategies.end(),
                      cell.strategy) == table.strategies.end())
            table.strategies.push_back(cell.strategy);
    }
    std::sort(table.budgets.begin(), table.budgets.end());
    table.values.assign(table.budgets.size(),
                        std::vector<double>(table.strategies.size(), kNaN));
    for (const SweepCell& cell : cells) {
        std::size_t bi = std::find(table.budgets.begin(), table.budgets.end(),
                                   cell.budget) -
                         table.budgets.begin();
        std::size_t si = std::find(table.strategies.begin(), table.strategies.end(),
                                   cell.strategy) -
                         table.strategies.begin();
        if (!std::isnan(table.values[bi][si]))
            throw DataError("duplicate sweep cell for budget " +
                            std::to_string(cell.budget) + ", strategy " + cell.strategy);
        table.values[bi][si] = cell.mean_score_after;
    }
    return table;
}

std::string format_sweep_table(const SweepTable& table) {
    std::size_t width = 12;
    for (const std::string& s : table.strategies) width = std::max(width, s.size() + 2);
    auto pad_left = [width](const std::string& s) {
        return std::string(width > s.size() ? width - s.size() : 0, ' ') + s;
    };
    auto num = [&pad_left](double v) {
        if (std::isnan(v)) return pad_left("-");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return pad_left(buf);
    };
    std::string out = pad_left("budget");
    for (const std::string& s : table.strategies) out += pad_left(s);
    out += "\n";
    out += pad_left("base");
    for (std::size_t s = 0; s < table.strategies.size(); ++s) out += num(table.baseline);
    out += "\n";
    for (std::size_t b = 0; b < table.budgets.size(); ++b) {
        out += pad_left(std::to_string(table.budgets[b]));
        for (std::size_t s = 0; s < table.strategies.size(); ++s)
            out += num(table.values[b][s]);
        out += "\n";
    }
    return out;
}

std::string sweep_table_to_json(const SweepTable& table) {
    json j;
    j["mean_score_before"] = table.baseline;
    j["budgets"] = table.budgets;
    j["strategies"] = table.strategies;
    j["mean_score_after"] = table.values;
    return j.dump(2) + "\n";
}

}  // namespace typoattack
