// Command line front end: preprocess, train, eval, attack, report, typos.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "typoattack/attack.hpp"
#include "typoattack/corpus.hpp"
#include "typoattack/errors.hpp"
#include "typoattack/hash.hpp"
#include "typoattack/metrics.hpp"
#include "typoattack/nn.hpp"
#include "typoattack/report.hpp"
#include "typoattack/typo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace typoattack;

namespace {

struct Shared {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
};

void add_shared(CLI::App* sub, Shared& shared) {
    sub->add_option("--seed", shared.seed, "Global random seed");
    sub->add_option("--output-dir", shared.output_dir, "Directory for artifacts");
    sub->fallthrough();
}

std::string joined(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output dir " + dir + ": " + ec.message());
}

Vocabulary load_vocab(const std::string& path) {
    return Vocabulary::deserialize(read_text_file(path));
}

LabelSpace load_labels(const std::string& path) {
    return LabelSpace::deserialize(read_text_file(path));
}

struct LoadedModel {
    Model model;
    Vocabulary vocab;
};

LoadedModel load_model(const std::string& checkpoint_path,
                       const std::string& vocab_path) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    Vocabulary vocab = load_vocab(vocab_path);
    if (vocab.fingerprint() != ckpt.vocab_fingerprint)
        throw DataError("vocabulary " + vocab_path +
                        " does not match the checkpoint's vocabulary fingerprint");
    return LoadedModel{Model{ckpt.config, std::move(ckpt.params)}, std::move(vocab)};
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
    Shared shared;
    std::string input;
    int num_labels = 50;
    int min_count = 3;
    double train_frac = 0.78, val_frac = 0.11, test_frac = 0.11;
};

void run_preprocess(const PreprocessArgs& args) {
    ensure_output_dir(args.shared.output_dir);
    std::vector<RawRecord> raw = read_raw_jsonl(args.input);
    std::vector<RawRecord> merged = merge_by_patient(raw);
    LabelSpace labels = build_label_space(merged, args.num_labels);

    SplitSpec spec;
    spec.train_frac = args.train_frac;
    spec.val_frac = args.val_frac;
    spec.test_frac = args.test_frac;
    spec.salt = derive_seed(args.shared.seed, "split");
    SplitResult sr = split(merged, spec);

    std::vector<std::vector<std::string>> train_tokens;
    train_tokens.reserve(sr.train.size());
    for (const RawRecord& rec : sr.train) train_tokens.push_back(tokenize(rec.text));
    Vocabulary vocab = build_vocabulary(train_tokens, args.min_count);

    std::vector<Document> train_docs = filter_and_encode(sr.train, labels);
    std::vector<Document> val_docs = filter_and_encode(sr.val, labels);
    std::vector<Document> test_docs = filter_and_encode(sr.test, labels);

    write_text_file(joined(args.shared.output_dir, "labels.tsv"), labels.serialize());
    write_text_file(joined(args.shared.output_dir, "vocab.tsv"), vocab.serialize());
    write_documents_jsonl(joined(args.shared.output_dir, "train.jsonl"), train_docs);
    write_documents_jsonl(joined(args.shared.output_dir, "val.jsonl"), val_docs);
    write_documents_jsonl(joined(args.shared.output_dir, "test.jsonl"), test_docs);

    json stats;
    stats["raw_records"] = raw.size();
    stats["merged_docs"] = merged.size();
    stats["num_labels"] = labels.size();
    stats["vocab_size"] = vocab.size();
    stats["split"] = {{"train", {{"records", sr.train.size()}, {"kept", train_docs.size()}}},
                      {"val", {{"records", sr.val.size()}, {"kept", val_docs.size()}}},
                      {"test", {{"records", sr.test.size()}, {"kept", test_docs.size()}}}};
    json freq = json::array();
    for (int i = 0; i < labels.size(); ++i)
        freq.push_back({{"code", labels.index_to_code[i]}, {"count", labels.counts[i]}});
    stats["label_counts"] = freq;
    write_text_file(joined(args.shared.output_dir, "stats.json"), stats.dump(2) + "\n");

    std::printf("preprocess: %zu raw -> %zu merged docs; split %zu/%zu/%zu kept; "
                "vocab %d tokens; %d labels\n",
                raw.size(), merged.size(), train_docs.size(), val_docs.size(),
                test_docs.size(), vocab.size(), labels.size());
}

// --------------------------------------------------------------------- train

struct TrainArgs {
    Shared shared;
    std::string train_path, val_path, vocab_path, labels_path;
    std::string variant = "max_pool";
    int embed_dim = 50, num_filters = 100, kernel_width = 4;
    double dropout = 0.2, lr = 1e-3;
    int batch_size = 16, max_epochs = 50, patience = 5;
};

void run_train(const TrainArgs& args) {
    ensure_output_dir(args.shared.output_dir);
    std::vector<Document> train_docs = read_documents_jsonl(args.train_path);
    std::vector<Document> val_docs = read_documents_jsonl(args.val_path);
    Vocabulary vocab = load_vocab(args.vocab_path);
    LabelSpace labels = load_labels(args.labels_path);

    ModelConfig config;
    config.variant = variant_from_name(args.variant);
    config.embed_dim = args.embed_dim;
    config.num_filters = args.num_filters;
    config.kernel_width = args.kernel_width;
    config.num_labels = labels.size();
    config.dropout_p = args.dropout;

    TrainConfig tc;
    tc.lr = args.lr;
    tc.batch_size = args.batch_size;
    tc.max_epochs = args.max_epochs;
    tc.patience = args.patience;
    tc.seed = derive_seed(args.shared.seed, "train");

    TrainResult result = train(config, train_docs, val_docs, vocab, tc);

    std::string ckpt_path = joined(args.shared.output_dir, "model.ckpt");
    save_checkpoint(ckpt_path, result.params, config, vocab.fingerprint());

    json history = json::array();
    for (const EpochStats& e : result.history)
        history.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"val_loss", e.val_loss},
                           {"val_p5", e.val_p5}});
    json j;
    j["history"] = history;
    j["best_epoch"] = result.best_epoch;
    j["best_val_p5"] = result.best_val_p5;
    write_text_file(joined(args.shared.output_dir, "history.json"), j.dump(2) + "\n");

    std::printf("train: %s, %zu epochs run, best epoch %d with val P@5 %.4f -> %s\n",
                args.variant.c_str(), result.history.size(), result.best_epoch,
                result.best_val_p5, ckpt_path.c_str());
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
    Shared shared;
    std::string checkpoint_path, corpus_path, vocab_path;
};

void run_eval(const EvalArgs& args) {
    ensure_output_dir(args.shared.output_dir);
    LoadedModel lm = load_model(args.checkpoint_path, args.vocab_path);
    std::vector<Document> docs = read_documents_jsonl(args.corpus_path);
    if (docs.empty()) throw DataError("eval: empty corpus " + args.corpus_path);
    if (!lm.model.params.all_finite())
        throw NumericalError("eval: checkpoint holds non-finite parameters");

    std::vector<std::vector<double>> probs;
    std::vector<std::set<int>> truths;
    probs.reserve(docs.size());
    truths.reserve(docs.size());
    for (const Document& doc : docs) {
        std::vector<int> ids =
            encode_tokens(doc.tokens, lm.vocab, lm.model.config.kernel_width);
        ForwardTrace trace = forward_ids(lm.model.params, lm.model.config, ids,
                                         static_cast<int>(doc.tokens.size()));
        probs.push_back(trace.probs);
        truths.push_back(doc.labels);
    }
    EvalReport report = evaluate(probs, truths);
    write_text_file(joined(args.shared.output_dir, "eval.json"),
                    eval_report_to_json(report));
    std::fputs(format_eval_table(report).c_str(), stdout);
}

// -------------------------------------------------------------------- attack

struct AttackArgs {
    Shared shared;
    std::string checkpoint_path, corpus_path, vocab_path;
    std::vector<int> budgets;
    std::vector<std::string> strategies;
    std::string mode = "greedy_min";
    std::string ops = "all";
    std::string insert_policy = "any";
    std::string keyboard_path;
    std::optional<int> max_candidates;
    int parallel = 1;
    int score_k = 5;
    std::optional<int> limit;
};

InsertPolicy parse_insert_policy(const std::string& name) {
    if (name == "any") return InsertPolicy::any_character;
    if (name == "flanking") return InsertPolicy::flanking_neighbors;
    throw std::invalid_argument("insert policy must be 'any' or 'flanking'");
}

void run_attack(const AttackArgs& args) {
    ensure_output_dir(args.shared.output_dir);
    LoadedModel lm = load_model(args.checkpoint_path, args.vocab_path);
    std::vector<Document> docs = read_documents_jsonl(args.corpus_path);
    if (args.limit && static_cast<int>(docs.size()) > *args.limit)
        docs.resize(*args.limit);

    AttackConfig base;
    base.mode = attack_mode_from_name(args.mode);
    base.ops = parse_ops(args.ops);
    base.insert_policy = parse_insert_policy(args.insert_policy);
    if (!args.keyboard_path.empty()) base.keyboard = KeyboardMap::load(args.keyboard_path);
    base.max_candidates_per_word = args.max_candidates;
    base.seed = derive_seed(args.shared.seed, "attack");
    base.score_k = args.score_k;

    std::vector<int> budgets = args.budgets.empty() ? std::vector<int>{10} : args.budgets;
    std::vector<std::string> strategies =
        args.strategies.empty() ? std::vector<std::string>{"max_gradient"}
                                : args.strategies;

    std::vector<SweepCell> cells;
    for (int budget : budgets) {
        for (const std::string& strategy : strategies) {
            AttackConfig config = base;
            config.budget = budget;
            config.strategy = strategy_from_name(strategy);
            CorpusAttackResult result =
                attack_corpus(lm.model, lm.vocab, docs, config, args.parallel);

            std::string stem = "K" + std::to_string(budget) + "_" + strategy;
            write_traces_jsonl(joined(args.shared.output_dir, "traces_" + stem + ".jsonl"),
                               result.traces);
            write_text_file(joined(args.shared.output_dir, "summary_" + stem + ".json"),
                            summary_to_json(result, config));
            if (result.aggregate_defined)
                cells.push_back(SweepCell{budget, strategy, result.mean_score_before,
                                          result.mean_score_after, result.docs});
            if (!result.failures.empty())
                std::fprintf(stderr, "attack %s: %zu document(s) failed\n", stem.c_str(),
                             result.failures.size());
        }
    }
    if (!cells.empty()) {
        SweepTable table = sweep_table(cells);
        std::string text = format_sweep_table(table);
        write_text_file(joined(args.shared.output_dir, "sweep.txt"), text);
        write_text_file(joined(args.shared.output_dir, "sweep.json"),
                        sweep_table_to_json(table));
        std::fputs(text.c_str(), stdout);
    } else {
        std::fputs("attack: no completed documents, no sweep table\n", stdout);
    }
}

// -------------------------------------------------------------------- report

struct ReportArgs {
    Shared shared;
    std::string traces_path, corpus_path, labels_path;
    int top = 3;
    int context = 4;
};

void run_report(const ReportArgs& args) {
    ensure_output_dir(args.shared.output_dir);
    std::vector<AttackTrace> traces = read_traces_jsonl(args.traces_path);
    std::vector<Document> corpus = read_documents_jsonl(args.corpus_path);
    LabelSpace labels = load_labels(args.labels_path);
    ReportOptions options;
    options.top_per_direction = args.top;
    options.context_window = args.context;
    std::string md = render_report_markdown(traces, corpus, labels, options);
    std::string html = render_report_html(traces, corpus, labels, options);
    write_text_file(joined(args.shared.output_dir, "report.md"), md);
    write_text_file(joined(args.shared.output_dir, "report.html"), html);
    std::printf("report: %zu traces -> %s and %s\n", traces.size(),
                joined(args.shared.output_dir, "report.md").c_str(),
                joined(args.shared.output_dir, "report.html").c_str());
}

// --------------------------------------------------------------------- typos

struct TyposArgs {
    std::string word;
    std::string ops = "all";
    std::string insert_policy = "any";
    std::string keyboard_path;
};

void run_typos(const TyposArgs& args) {
    KeyboardMap keyboard = args.keyboard_path.empty()
                               ? KeyboardMap::default_qwerty()
                               : KeyboardMap::load(args.keyboard_path);
    OpsMask ops = parse_ops(args.ops);
    InsertPolicy policy = parse_insert_policy(args.insert_policy);
    std::vector<PerturbationCandidate> cands =
        generate_candidates(args.word, ops, keyboard, policy);

    const TypoOp order[] = {TypoOp::Insert, TypoOp::Delete, TypoOp::Swap,
                           TypoOp::Replace};
    for (TypoOp op : order) {
        std::string line;
        for (const PerturbationCandidate& c : cands) {
            if (c.op != op) continue;
            line += ' ';
            line += c.new_token;
        }
        if (!line.empty()) std::printf("%s:%s\n", typo_op_name(op), line.c_str());
    }
    std::printf("total: %d\n",
                count_candidates(args.word, ops, keyboard, policy));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Typo-based adversarial attacks on multilabel CNN text classifiers"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key/value config file; flags override it");

    PreprocessArgs pre;
    CLI::App* sub_pre = app.add_subcommand("preprocess",
                                           "Merge, label, split and tokenize a raw corpus");
    add_shared(sub_pre, pre.shared);
    sub_pre->add_option("--input", pre.input, "Raw corpus JSONL")->required();
    sub_pre->add_option("--num-labels", pre.num_labels, "Label space size");
    sub_pre->add_option("--min-count", pre.min_count, "Vocabulary count threshold");
    sub_pre->add_option("--train-frac", pre.train_frac, "Train fraction");
    sub_pre->add_option("--val-frac", pre.val_frac, "Validation fraction");
    sub_pre->add_option("--test-frac", pre.test_frac, "Test fraction");

    TrainArgs tr;
    CLI::App* sub_tr = app.add_subcommand("train", "Train a CNN classifier");
    add_shared(sub_tr, tr.shared);
    sub_tr->add_option("--train", tr.train_path, "Training documents JSONL")->required();
    sub_tr->add_option("--val", tr.val_path, "Validation documents JSONL")->required();
    sub_tr->add_option("--vocab", tr.vocab_path, "Vocabulary file")->required();
    sub_tr->add_option("--labels", tr.labels_path, "Label space file")->required();
    sub_tr->add_option("--variant", tr.variant, "max_pool or label_attention");
    sub_tr->add_option("--embed-dim", tr.embed_dim, "Embedding size");
    sub_tr->add_option("--filters", tr.num_filters, "Convolution filter count");
    sub_tr->add_option("--kernel", tr.kernel_width, "Convolution kernel width");
    sub_tr->add_option("--dropout", tr.dropout, "Dropout probability on embeddings");
    sub_tr->add_option("--lr", tr.lr, "Adam learning rate");
    sub_tr->add_option("--batch", tr.batch_size, "Batch size");
    sub_tr->add_option("--epochs", tr.max_epochs, "Maximum epochs");
    sub_tr->add_option("--patience", tr.patience, "Early stopping patience");

    EvalArgs ev;
    CLI::App* sub_ev = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
    add_shared(sub_ev, ev.shared);
    sub_ev->add_option("--checkpoint", ev.checkpoint_path, "Model checkpoint")->required();
    sub_ev->add_option("--corpus", ev.corpus_path, "Documents JSONL")->required();
    sub_ev->add_option("--vocab", ev.vocab_path, "Vocabulary file")->required();

    AttackArgs at;
    CLI::App* sub_at = app.add_subcommand("attack", "Run the typo attack sweep");
    add_shared(sub_at, at.shared);
    sub_at->add_option("--checkpoint", at.checkpoint_path, "Model checkpoint")->required();
    sub_at->add_option("--corpus", at.corpus_path, "Documents JSONL")->required();
    sub_at->add_option("--vocab", at.vocab_path, "Vocabulary file")->required();
    sub_at->add_option("--budget", at.budgets, "Edit budget K (repeatable)");
    sub_at->add_option("--strategy", at.strategies,
                       "max_gradient or random (repeatable)");
    sub_at->add_option("--mode", at.mode, "greedy_min or monotone");
    sub_at->add_option("--ops", at.ops,
                       "Comma list of insert,delete,swap,replace or 'all'");
    sub_at->add_option("--insert-policy", at.insert_policy, "any or flanking");
    sub_at->add_option("--keyboard", at.keyboard_path, "Keyboard adjacency JSON");
    sub_at->add_option("--max-candidates", at.max_candidates,
                       "Cap candidate list per word");
    sub_at->add_option("--parallel", at.parallel, "Worker thread count");
    sub_at->add_option("--score-k", at.score_k, "Precision@k cutoff");
    sub_at->add_option("--limit", at.limit, "Attack only the first N documents");

    ReportArgs rp;
    CLI::App* sub_rp = app.add_subcommand("report", "Render before/after highlights");
    add_shared(sub_rp, rp.shared);
    sub_rp->add_option("--traces", rp.traces_path, "Attack traces JSONL")->required();
    sub_rp->add_option("--corpus", rp.corpus_path, "Documents JSONL")->required();
    sub_rp->add_option("--labels", rp.labels_path, "Label space file")->required();
    sub_rp->add_option("--top", rp.top, "Documents per direction");
    sub_rp->add_option("--context", rp.context, "Context tokens around an edit");

    TyposArgs ty;
    CLI::App* sub_ty = app.add_subcommand("typos", "List single-typo candidates");
    sub_ty->add_option("word", ty.word, "Token to perturb")->required();
    sub_ty->add_option("--ops", ty.ops, "Comma list of operators or 'all'");
    sub_ty->add_option("--insert-policy", ty.insert_policy, "any or flanking");
    sub_ty->add_option("--keyboard", ty.keyboard_path, "Keyboard adjacency JSON");

    try {
        app.parse(argc, argv);
        if (sub_pre->parsed()) run_preprocess(pre);
        if (sub_tr->parsed()) run_train(tr);
        if (sub_ev->parsed()) run_eval(ev);
        if (sub_at->parsed()) run_attack(at);
        if (sub_rp->parsed()) run_report(rp);
        if (sub_ty->parsed()) run_typos(ty);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
