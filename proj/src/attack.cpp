#include "typoattack/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "json.hpp"

#include "typoattack/errors.hpp"
#include "typoattack/hash.hpp"
#include "typoattack/metrics.hpp"

namespace typoattack {

using nlohmann::json;

const char* strategy_name(Strategy s) {
    return s == Strategy::max_gradient ? "max_gradient" : "random";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "max_gradient") return Strategy::max_gradient;
    if (name == "random") return Strategy::random_pick;
    throw DataError("unknown strategy '" + name + "'");
}

const char* attack_mode_name(AttackMode m) {
    return m == AttackMode::greedy_min ? "greedy_min" : "monotone";
}

AttackMode attack_mode_from_name(const std::string& name) {
    if (name == "greedy_min") return AttackMode::greedy_min;
    if (name == "monotone") return AttackMode::monotone;
    throw DataError("unknown attack mode '" + name + "'");
}

namespace {

ScoredDoc score_ids(const Model& model, std::span<const int> ids, int real_tokens,
                    std::span<const double> targets, int k) {
    ForwardTrace trace = forward_ids(model.params, model.config, ids, real_tokens);
    ScoredDoc sd;
    sd.top_k = top_k_indices(trace.probs, k);
    int hits = 0;
    for (int l : sd.top_k)
        if (targets[l] > 0.5) ++hits;
    sd.score = static_cast<double>(hits) / k;
    sd.loss = loss_bce(trace, targets);
    return sd;
}

// Strictly better for the attacker: lower score, then higher loss.
bool attack_improves(double score, double loss, double cur_score, double cur_loss) {
    if (score != cur_score) return score < cur_score;
    return loss > cur_loss;
}

}  // namespace

ScoredDoc score_document(const Model& model, const Vocabulary& vocab,
                         const std::vector<std::string>& tokens,
                         const std::set<int>& truth, int k) {
    if (truth.empty()) throw std::invalid_argument("score_document: empty truth set");
    if (tokens.empty()) throw std::invalid_argument("score_document: empty token list");
    if (!model.params.all_finite())
        throw NumericalError("score_document: non-finite parameter");
    std::vector<double> targets = targets_from(truth, model.config.num_labels);
    std::vector<int> ids = encode_tokens(tokens, vocab, model.config.kernel_width);
    return score_ids(model, ids, static_cast<int>(tokens.size()), targets, k);
}

std::optional<int> select_position(std::span<const double> grad_norms,
                                   std::span<const char> eligible,
                                   Strategy strategy, std::mt19937_64& rng) {
    if (grad_norms.size() != eligible.size())
        throw std::invalid_argument("select_position: norm/eligibility size mismatch");
    std::vector<int> open;
    for (std::size_t i = 0; i < eligible.size(); ++i)
        if (eligible[i]) open.push_back(static_cast<int>(i));
    if (open.empty()) return std::nullopt;
    if (strategy == Strategy::max_gradient) {
        int best = open.front();
        for (int i : open)
            if (grad_norms[i] > grad_norms[best]) best = i;  // ties keep lowest index
        return best;
    }
    std::uniform_int_distribution<std::size_t> dist(0, open.size() - 1);
    return open[dist(rng)];
}

BestTypo best_typo(const Model& model, const Vocabulary& vocab,
                   const std::vector<std::string>& tokens,
                   const std::set<int>& truth, int position,
                   const std::vector<PerturbationCandidate>& candidates, int k) {
    if (candidates.empty()) throw std::invalid_argument("best_typo: no candidates");
    if (position < 0 || position >= static_cast<int>(tokens.size()))
        throw std::invalid_argument("best_typo: position out of range");
    std::vector<double> targets = targets_from(truth, model.config.num_labels);
    std::vector<int> ids = encode_tokens(tokens, vocab, model.config.kernel_width);
    const int real = static_cast<int>(tokens.size());

    // Out-of-vocabulary candidates all map to <UNK> and produce identical
    // predictions, so one forward pass per distinct token id suffices.
    std::unordered_map<int, ScoredDoc> by_id;
    BestTypo best;
    bool have = false;
    for (const PerturbationCandidate& cand : candidates) {
        int cid = vocab.lookup(cand.new_token);
        auto it = by_id.find(cid);
        if (it == by_id.end()) {
            ids[position] = cid;
            it = by_id.emplace(cid, score_ids(model, ids, real, targets, k)).first;
        }
        const ScoredDoc& sd = it->second;
        if (!have || attack_improves(sd.score, sd.loss, best.score, best.loss)) {
            best.candidate = cand;
            best.score = sd.score;
            best.loss = sd.loss;
            best.top_k = sd.top_k;
            have = true;
        }
    }
    return best;
}

AttackTrace attack_document(const Model& model, const Vocabulary& vocab,
                            const Document& doc, const AttackConfig& config) {
    if (config.budget < 0) throw std::invalid_argument("attack: budget must be >= 0");
    if (config.score_k < 1 || config.score_k > model.config.num_labels)
        throw std::invalid_argument("attack: score_k must be in [1, num labels]");
    if (config.max_candidates_per_word && *config.max_candidates_per_word < 1)
        throw std::invalid_argument("attack: max_candidates_per_word must be >= 1");
    if (doc.tokens.empty())
        throw DataError("attack: document '" + doc.doc_id + "' has no tokens");
    if (doc.labels.empty())
        throw DataError("attack: document '" + doc.doc_id + "' has no labels");
    if (!model.params.all_finite()) throw NumericalError("attack: non-finite parameter");

    AttackTrace trace;
    trace.doc_id = doc.doc_id;
    trace.budget = config.budget;
    trace.strategy = config.strategy;
    trace.mode = config.mode;
    trace.seed = salted_hash(config.seed, doc.doc_id);
    trace.initial_tokens = doc.tokens;

    std::mt19937_64 rng(trace.seed);
    std::vector<double> targets = targets_from(doc.labels, model.config.num_labels);
    std::vector<std::string> tokens = doc.tokens;
    const int n_real = static_cast<int>(tokens.size());

    std::vector<int> ids = encode_tokens(tokens, vocab, model.config.kernel_width);
    ScoredDoc cur = score_ids(model, ids, n_real, targets, config.score_k);
    trace.initial_score = cur.score;
    trace.initial_loss = cur.loss;
    trace.initial_top = cur.top_k;

    // Candidate lists per surface form, capped if configured; a token with no
    // candidates is simply never eligible.
    std::unordered_map<std::string, std::vector<PerturbationCandidate>> cand_memo;
    auto candidates_for = [&](const std::string& token)
        -> const std::vector<PerturbationCandidate>& {
        auto it = cand_memo.find(token);
        if (it == cand_memo.end()) {
            std::vector<PerturbationCandidate> cands = generate_candidates(
                token, config.ops, config.keyboard, config.insert_policy);
            if (config.max_candidates_per_word &&
                static_cast<int>(cands.size()) > *config.max_candidates_per_word)
                cands.resize(*config.max_candidates_per_word);
            it = cand_memo.emplace(token, std::move(cands)).first;
        }
        return it->second;
    };

    std::vector<char> attacked(n_real, 0);
    try {
        for (int iter = 0; iter < config.budget; ++iter) {
            ForwardTrace ft = forward_ids(model.params, model.config, ids, n_real);
            InputGradients ig = backward_input(ft, model.params, model.config, targets);

            std::vector<char> eligible(ig.norms.size(), 0);
            for (int i = 0; i < n_real; ++i)
                eligible[i] = !attacked[i] && !candidates_for(tokens[i]).empty();
            std::optional<int> pos =
                select_position(ig.norms, eligible, config.strategy, rng);
            if (!pos) break;  // every position attacked or unattackable

            const auto& cands = candidates_for(tokens[*pos]);
            BestTypo best =
                best_typo(model, vocab, tokens, doc.labels, *pos, cands, config.score_k);
            attacked[*pos] = 1;
            if (config.mode == AttackMode::monotone &&
                !attack_improves(best.score, best.loss, cur.score, cur.loss))
                continue;  // keep the iteration spent, skip the edit

            AttackStep step;
            step.iteration = iter;
            step.position = *pos;
            step.original = tokens[*pos];
            step.replacement = best.candidate.new_token;
            step.op = best.candidate.op;
            step.score_before = cur.score;
            step.loss_before = cur.loss;
            step.score_after = best.score;
            step.loss_after = best.loss;
            trace.steps.push_back(std::move(step));

            tokens[*pos] = best.candidate.new_token;
            ids[*pos] = vocab.lookup(tokens[*pos]);
            cur.score = best.score;
            cur.loss = best.loss;
            cur.top_k = best.top_k;
        }
    } catch (const std::exception& e) {
        trace.completed = false;
        trace.error = e.what();
    }

    trace.final_tokens = tokens;
    trace.final_score = cur.score;
    trace.final_loss = cur.loss;
    trace.final_top = cur.top_k;
    return trace;
}

CorpusAttackResult attack_corpus(const Model& model, const Vocabulary& vocab,
                                 const std::vector<Document>& docs,
                                 const AttackConfig& config, int parallelism) {
    if (parallelism < 1) throw std::invalid_argument("attack: parallelism must be >= 1");
    struct Slot {
        bool threw = false;
        std::string error;
        AttackTrace trace;
    };
    std::vector<Slot> slots(docs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= docs.size()) return;
            try {
                slots[i].trace = attack_document(model, vocab, docs[i], config);
            } catch (const std::exception& e) {
                slots[i].threw = true;
                slots[i].error = e.what();
            }
        }
    };
    int threads = std::min(
        parallelism, static_cast<int>(std::max<std::size_t>(docs.size(), 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    CorpusAttackResult result;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (slots[i].threw)
            result.failures.push_back({docs[i].doc_id, slots[i].error});
        else if (!slots[i].trace.completed)
            result.failures.push_back({docs[i].doc_id, slots[i].trace.error});
        else
            result.traces.push_back(std::move(slots[i].trace));
    }
    result.docs = static_cast<int>(result.traces.size());
    if (result.docs > 0) {
        // Sum in doc_id order so the float result is independent of thread
        // scheduling and of the input permutation.
        std::vector<const AttackTrace*> ordered;
        ordered.reserve(result.traces.size());
        for (const AttackTrace& t : result.traces) ordered.push_back(&t);
        std::sort(ordered.begin(), ordered.end(),
                  [](const AttackTrace* a, const AttackTrace* b) {
                      return a->doc_id < b->doc_id;
                  });
        double before = 0.0, after = 0.0;
        for (const AttackTrace* t : ordered) {
            before += t->initial_score;
            after += t->final_score;
        }
        result.mean_score_before = before / result.docs;
        result.mean_score_after = after / result.docs;
        result.aggregate_defined = true;
    }
    return result;
}

bool perturbation_budget_check(const AttackTrace& trace) {
    if (static_cast<int>(trace.steps.size()) > trace.budget) return false;
    if (trace.initial_tokens.size() != trace.final_tokens.size()) return false;
    std::set<int> positions;
    for (const AttackStep& step : trace.steps) {
        if (step.position < 0 ||
            step.position >= static_cast<int>(trace.initial_tokens.size()))
            return false;
        if (!positions.insert(step.position).second) return false;  // position reused
        if (trace.final_tokens[step.position] != step.replacement) return false;
        if (damerau_levenshtein(trace.initial_tokens[step.position],
                                trace.final_tokens[step.position]) != 1)
            return false;
    }
    for (std::size_t i = 0; i < trace.initial_tokens.size(); ++i) {
        bool edited = positions.count(static_cast<int>(i)) > 0;
        if (edited == (trace.initial_tokens[i] == trace.final_tokens[i])) return false;
    }
    return true;
}

std::string trace_to_json_line(const AttackTrace& trace) {
    json steps = json::array();
    for (const AttackStep& step : trace.steps) {
        steps.push_back({{"iteration", step.iteration},
                         {"position", step.position},
                         {"original", step.original},
                         {"replacement", step.replacement},
                         {"op", typo_op_name(step.op)},
                         {"score_before", step.score_before},
                         {"score_after", step.score_after},
                         {"loss_before", step.loss_before},
                         {"loss_after", step.loss_after}});
    }
    json j;
    j["schema_version"] = 1;
    j["doc_id"] = trace.doc_id;
    j["budget"] = trace.budget;
    j["strategy"] = strategy_name(trace.strategy);
    j["mode"] = attack_mode_name(trace.mode);
    j["seed"] = trace.seed;
    j["initial_tokens"] = trace.initial_tokens;
    j["final_tokens"] = trace.final_tokens;
    j["initial_score"] = trace.initial_score;
    j["final_score"] = trace.final_score;
    j["initial_loss"] = trace.initial_loss;
    j["final_loss"] = trace.final_loss;
    j["initial_top"] = trace.initial_top;
    j["final_top"] = trace.final_top;
    j["steps"] = steps;
    j["completed"] = trace.completed;
    if (!trace.completed) j["error"] = trace.error;
    return j.dump();
}

AttackTrace trace_from_json_line(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw DataError("trace line is not a JSON object");
    try {
        if (j.at("schema_version").get<int>() != 1)
            throw DataError("unsupported trace schema version");
        AttackTrace trace;
        trace.doc_id = j.at("doc_id").get<std::string>();
        trace.budget = j.at("budget").get<int>();
        trace.strategy = strategy_from_name(j.at("strategy").get<std::string>());
        trace.mode = attack_mode_from_name(j.at("mode").get<std::string>());
        trace.seed = j.at("seed").get<std::uint64_t>();
        trace.initial_tokens = j.at("initial_tokens").get<std::vector<std::string>>();
        trace.final_tokens = j.at("final_tokens").get<std::vector<std::string>>();
        trace.initial_score = j.at("initial_score").get<double>();
        trace.final_score = j.at("final_score").get<double>();
        trace.initial_loss = j.at("initial_loss").get<double>();
        trace.final_loss = j.at("final_loss").get<double>();
        trace.initial_top = j.at("initial_top").get<std::vector<int>>();
        trace.final_top = j.at("final_top").get<std::vector<int>>();
        for (const json& s : j.at("steps")) {
            AttackStep step;
            step.iteration = s.at("iteration").get<int>();
            step.position = s.at("position").get<int>();
            step.original = s.at("original").get<std::string>();
            step.replacement = s.at("replacement").get<std::string>();
            step.op = typo_op_from_name(s.at("op").get<std::string>());
            step.score_before = s.at("score_before").get<double>();
            step.score_after = s.at("score_after").get<double>();
            step.loss_before = s.at("loss_before").get<double>();
            step.loss_after = s.at("loss_after").get<double>();
            trace.steps.push_back(std::move(step));
        }
        trace.completed = j.at("completed").get<bool>();
        if (j.contains("error")) trace.error = j["error"].get<std::string>();
        return trace;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad trace line: ") + e.what());
    }
}

void write_traces_jsonl(const std::string& path,
                        const std::vector<AttackTrace>& traces) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (const AttackTrace& trace : traces) out << trace_to_json_line(trace) << '\n';
    if (!out) throw DataError("failed writing " + path);
}

std::vector<AttackTrace> read_traces_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<AttackTrace> traces;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            traces.push_back(trace_from_json_line(line));
        } catch (const DataError& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return traces;
}

std::string summary_to_json(const CorpusAttackResult& result,
                            const AttackConfig& config) {
    json j;
    j["budget"] = config.budget;
    j["strategy"] = strategy_name(config.strategy);
    j["mode"] = attack_mode_name(config.mode);
    j["seed"] = config.seed;
    if (result.aggregate_defined) {
        j["mean_score_before"] = result.mean_score_before;
        j["mean_score_after"] = result.mean_score_after;
    } else {
        j["mean_score_before"] = nullptr;
        j["mean_score_after"] = nullptr;
    }
    j["docs"] = result.docs;
    json failures = json::array();
    for (const auto& f : result.failures)
        failures.push_back({{"doc_id", f.doc_id}, {"error", f.error}});
    j["failures"] = failures;
    return j.dump(2) + "\n";
}

}  // namespace typoattack
