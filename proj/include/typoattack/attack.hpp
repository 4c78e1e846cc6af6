#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "typoattack/corpus.hpp"
#include "typoattack/nn.hpp"
#include "typoattack/typo.hpp"

namespace typoattack {

enum class Strategy { max_gradient, random_pick };
enum class AttackMode { greedy_min, monotone };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
const char* attack_mode_name(AttackMode m);
AttackMode attack_mode_from_name(const std::string& name);

// Immutable trained model bundle the attack runs against.
struct Model {
    ModelConfig config;
    ModelParams params;
};

struct AttackConfig {
    int budget = 10;  // K: max number of token positions edited
    Strategy strategy = Strategy::max_gradient;
    // greedy_min applies the best candidate unconditionally, which can raise
    // the score; monotone rejects steps that do not strictly improve
    // (score, -loss) and so never ends above the initial score.
    AttackMode mode = AttackMode::greedy_min;
    OpsMask ops;
    InsertPolicy insert_policy = InsertPolicy::any_character;
    KeyboardMap keyboard = KeyboardMap::default_qwerty();
    std::optional<int> max_candidates_per_word;
    std::uint64_t seed = 0;
    int score_k = 5;  // precision@k score function
};

struct AttackStep {
    int iteration = 0;  // 0-based loop index
    int position = 0;   // token index, distinct within a trace
    std::string original;
    std::string replacement;
    TypoOp op = TypoOp::Replace;
    double score_before = 0.0, score_after = 0.0;
    double loss_before = 0.0, loss_after = 0.0;
};

struct AttackTrace {
    std::string doc_id;
    int budget = 0;
    Strategy strategy = Strategy::max_gradient;
    AttackMode mode = AttackMode::greedy_min;
    std::uint64_t seed = 0;
    std::vector<std::string> initial_tokens, final_tokens;
    double initial_score = 0.0, final_score = 0.0;
    double initial_loss = 0.0, final_loss = 0.0;
    std::vector<int> initial_top, final_top;  // top-k label indices
    std::vector<AttackStep> steps;
    bool completed = true;   // false when a step failed; partial results kept
    std::string error;       // failure description when !completed
};

struct ScoredDoc {
    double score = 0.0;  // precision@k, multiples of 1/k
    double loss = 0.0;   // mean BCE
    std::vector<int> top_k;
};

// Precision@k of the model's prediction against the truth set, plus the
// loss used as the dense tie-breaker between candidates.
ScoredDoc score_document(const Model& model, const Vocabulary& vocab,
                         const std::vector<std::string>& tokens,
                         const std::set<int>& truth, int k = 5);

// max_gradient: eligible position with the largest gradient norm, ties to
// the lowest index. random_pick: uniform over eligible positions. Returns
// nullopt when nothing is eligible (attack exhausted).
std::optional<int> select_position(std::span<const double> grad_norms,
                                   std::span<const char> eligible,
                                   Strategy strategy, std::mt19937_64& rng);

struct BestTypo {
    PerturbationCandidate candidate;
    double score = 0.0;
    double loss = 0.0;
    std::vector<int> top_k;
};

// Scores every candidate substituted at `position` and picks the minimum
// score, ties broken by maximum loss, then by enumeration order. Candidates
// mapping to the same token id share one model evaluation.
BestTypo best_typo(const Model& model, const Vocabulary& vocab,
                   const std::vector<std::string>& tokens,
                   const std::set<int>& truth, int position,
                   const std::vector<PerturbationCandidate>& candidates, int k);

// The greedy budgeted attack loop: per iteration, recompute input gradients
// on the current document, pick a previously unattacked position per the
// strategy, and substitute the best typo there (mode permitting). Stops
// early when no eligible position remains.
AttackTrace attack_document(const Model& model, const Vocabulary& vocab,
                            const Document& doc, const AttackConfig& config);

struct CorpusAttackResult {
    std::vector<AttackTrace> traces;  // input order, completed traces only
    struct Failure {
        std::string doc_id;
        std::string error;
    };
    std::vector<Failure> failures;
    int docs = 0;  // number of completed traces
    bool aggregate_defined = false;
    double mean_score_before = 0.0;  // meaningless unless aggregate_defined
    double mean_score_after = 0.0;
};

// Independent per-document attacks; the per-document rng seed is derived
// from (config.seed, doc_id) so the result is identical for any degree of
// parallelism. Aggregation sums in doc_id order.
CorpusAttackResult attack_corpus(const Model& model, const Vocabulary& vocab,
                                 const std::vector<Document>& docs,
                                 const AttackConfig& config, int parallelism = 1);

// True iff the trace respects its budget: at most K steps, all edited
// positions distinct, the final tokens differ from the initial ones exactly
// at the step positions, and every edit is Damerau-Levenshtein distance 1.
bool perturbation_budget_check(const AttackTrace& trace);

// Trace io: JSON-lines, one trace per line, schema_version 1.
std::string trace_to_json_line(const AttackTrace& trace);
AttackTrace trace_from_json_line(const std::string& line);
void write_traces_jsonl(const std::string& path, const std::vector<AttackTrace>& traces);
std::vector<AttackTrace> read_traces_jsonl(const std::string& path);

// Aggregate summary: {budget, strategy, mode, seed, mean_score_before,
// mean_score_after, docs, failures}. Mean fields are null when no document
// completed.
std::string summary_to_json(const CorpusAttackResult& result, const AttackConfig& config);

}  // namespace typoattack
