#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

namespace typoattack {

// Indices of the k highest probabilities, descending; equal probabilities
// rank by ascending label index. Every ranking in the toolkit goes through
// this one function so tie handling cannot drift between modules.
std::vector<int> top_k_indices(std::span<const double> probs, int k);

struct ConfusionCounts {
    long tp = 0, fp = 0, fn = 0;
};

struct F1Result {
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
    std::vector<ConfusionCounts> per_label;
    std::vector<double> per_label_f1;
};

// Threshold predictions at `threshold` (>=), per-label F1 with 0/0 taken as
// 0, macro as the unweighted label mean, micro from pooled counts.
F1Result f1_scores(const std::vector<std::vector<double>>& probs,
                   const std::vector<std::set<int>>& truths,
                   double threshold = 0.5);

struct AucResult {
    double macro_auc = 0.0;  // NaN when no label is usable
    double micro_auc = 0.0;  // NaN when degenerate
    bool macro_defined = false;
    bool micro_defined = false;
    std::vector<double> per_label;  // NaN for skipped labels
    std::vector<int> skipped_labels;
};

// Rank-statistic ROC-AUC (ties contribute 1/2). Labels with no positive or
// no negative instance are skipped for the macro average; the micro score
// pools every (document, label) pair into one binary problem.
AucResult auc_scores(const std::vector<std::vector<double>>& probs,
                     const std::vector<std::set<int>>& truths);

// Single-sequence AUC; sets *defined to false on a degenerate label set.
double roc_auc(std::span<const double> scores, const std::vector<char>& positives,
               bool* defined);

// Mean over documents of |top-k ∩ truth| / k. Requires k <= num labels.
double precision_at_k(const std::vector<std::vector<double>>& probs,
                      const std::vector<std::set<int>>& truths, int k = 5);

struct EvalReport {
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
    double macro_auc = 0.0;
    double micro_auc = 0.0;
    double precision_at_5 = 0.0;
    std::vector<ConfusionCounts> per_label_counts;
    std::vector<double> per_label_f1;
    std::vector<double> per_label_auc;
    std::vector<int> auc_skipped_labels;
};

EvalReport evaluate(const std::vector<std::vector<double>>& probs,
                    const std::vector<std::set<int>>& truths,
                    double threshold = 0.5, int k = 5);

std::string eval_report_to_json(const EvalReport& report);
std::string format_eval_table(const EvalReport& report);

// One sweep cell: the aggregate of one (budget, strategy) attack run.
struct SweepCell {
    int budget = 0;
    std::string strategy;
    double mean_score_before = 0.0;
    double mean_score_after = 0.0;
    int docs = 0;
};

struct SweepTable {
    double baseline = 0.0;  // shared mean score before attack
    std::vector<int> budgets;            // ascending
    std::vector<std::string> strategies; // column order
    std::vector<std::vector<double>> values;  // [budget][strategy]
};

// Groups cells into a budget x strategy grid. Throws DataError when cells
// disagree on the baseline or a (budget, strategy) pair repeats.
SweepTable sweep_table(const std::vector<SweepCell>& cells);

std::string format_sweep_table(const SweepTable& table);
std::string sweep_table_to_json(const SweepTable& table);

}  // namespace typoattack
