#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>

#include "../common/gradcheck.hpp"
#include "../common/temp_dir.hpp"
#include "typoattack/errors.hpp"
#include "typoattack/nn.hpp"

using namespace typoattack;

namespace {

Vocabulary tiny_vocab() {
    // ids: alpha=2, beta=3, delta=4, gamma=5 (equal counts, token order)
    return Vocabulary::from_counts(
        {{"alpha", 5}, {"beta", 5}, {"gamma", 5}, {"delta", 5}}, 1);
}

ModelConfig tiny_config(Variant v, int d, int f, int k, int l) {
    ModelConfig c;
    c.variant = v;
    c.embed_dim = d;
    c.num_filters = f;
    c.kernel_width = k;
    c.num_labels = l;
    c.dropout_p = 0.0;
    return c;
}

}  // namespace

TEST_CASE("zero parameters give probability one half everywhere") {
    Vocabulary vocab = tiny_vocab();
    for (Variant v : {Variant::max_pool, Variant::label_attention}) {
        ModelConfig config = tiny_config(v, 3, 2, 2, 4);
        ModelParams params = ModelParams::zeros(config, vocab.size());
        ForwardTrace trace = forward(params, config, {"alpha", "beta", "gamma"}, vocab);
        for (double z : trace.logits) CHECK(z == 0.0);
        for (double p : trace.probs) CHECK(p == 0.5);
        CHECK(loss_bce(trace, std::set<int>{0, 2}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("hand-computed single-filter forward") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::max_pool, 1, 1, 1, 1);
    ModelParams params = ModelParams::zeros(config, vocab.size());
    params.embedding.at(2, 0) = 0.3;  // "alpha"
    params.conv_w.at(0, 0) = 1.0;
    params.out_w.at(0, 0) = 1.0;
    ForwardTrace trace = forward(params, config, {"alpha"}, vocab);
    double expected_z = std::tanh(0.3);
    CHECK(trace.logits[0] == doctest::Approx(expected_z).epsilon(1e-15));
    CHECK(trace.probs[0] ==
          doctest::Approx(1.0 / (1.0 + std::exp(-expected_z))).epsilon(1e-15));
    CHECK(trace.pool_argmax[0] == 0);
}

TEST_CASE("hand-computed label-attention forward") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::label_attention, 1, 1, 1, 1);
    ModelParams params = ModelParams::zeros(config, vocab.size());
    params.embedding.at(2, 0) = 0.2;  // alpha
    params.embedding.at(3, 0) = 0.4;  // beta
    params.conv_w.at(0, 0) = 1.0;
    params.attn_w.at(0, 0) = 1.0;
    params.out_w.at(0, 0) = 1.0;
    ForwardTrace trace = forward(params, config, {"alpha", "beta"}, vocab);

    double h0 = std::tanh(0.2), h1 = std::tanh(0.4);
    double e0 = std::exp(h0), e1 = std::exp(h1);
    double a0 = e0 / (e0 + e1), a1 = e1 / (e0 + e1);
    double expected_z = a0 * h0 + a1 * h1;
    CHECK(trace.logits[0] == doctest::Approx(expected_z).epsilon(1e-12));
    CHECK(trace.attn.at(0, 0) == doctest::Approx(a0).epsilon(1e-12));
}

TEST_CASE("constant activations give uniform attention") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::label_attention, 2, 2, 1, 3);
    ModelParams params = ModelParams::random_init(config, vocab.size(), 11);
    // identical token at every position -> H constant across positions
    ForwardTrace trace =
        forward(params, config, {"alpha", "alpha", "alpha", "alpha"}, vocab);
    int T = static_cast<int>(trace.attn.cols);
    for (int l = 0; l < config.num_labels; ++l)
        for (int t = 0; t < T; ++t)
            CHECK(trace.attn.at(l, t) == doctest::Approx(1.0 / T).epsilon(1e-12));
}

TEST_CASE("attention rows always sum to one") {
    for (int s = 0; s < 5; ++s) {
        gradcheck::Instance inst =
            gradcheck::make_instance(Variant::label_attention, 500 + s);
        ForwardTrace trace =
            forward_ids(inst.params, inst.config, inst.ids, inst.real_tokens);
        for (std::size_t l = 0; l < trace.attn.rows; ++l) {
            double sum = 0.0;
            for (double a : trace.attn.row(l)) sum += a;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("forward rejects empty input and non-finite parameters") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::max_pool, 2, 2, 2, 2);
    ModelParams params = ModelParams::zeros(config, vocab.size());
    CHECK_THROWS_AS(forward(params, config, {}, vocab), std::invalid_argument);
    params.out_b[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(params, config, {"alpha"}, vocab), NumericalError);
}

TEST_CASE("short documents are right-padded to the kernel width") {
    Vocabulary vocab = tiny_vocab();
    auto ids = encode_tokens({"alpha"}, vocab, 4);
    CHECK(ids == std::vector<int>{2, 0, 0, 0});
    CHECK(encode_tokens({"unknown_word"}, vocab, 1) == std::vector<int>{1});

    ModelConfig config = tiny_config(Variant::max_pool, 2, 2, 4, 2);
    ModelParams params = ModelParams::random_init(config, vocab.size(), 3);
    ForwardTrace trace = forward(params, config, {"alpha"}, vocab);
    for (double p : trace.probs) CHECK(std::isfinite(p));
}

TEST_CASE("trailing pad beyond the effective length changes nothing") {
    Vocabulary vocab = tiny_vocab();
    for (Variant v : {Variant::max_pool, Variant::label_attention}) {
        ModelConfig config = tiny_config(v, 3, 2, 2, 4);
        ModelParams params = ModelParams::random_init(config, vocab.size(), 17);
        std::vector<int> bare = {2, 3, 5};
        std::vector<int> padded = {2, 3, 5, 0, 0, 0, 0};
        ForwardTrace a = forward_ids(params, config, bare, 3);
        ForwardTrace b = forward_ids(params, config, padded, 3);
        for (int l = 0; l < config.num_labels; ++l) CHECK(a.logits[l] == b.logits[l]);
    }
}

TEST_CASE("loss applies probability clamping") {
    ForwardTrace trace;
    trace.probs = {1e-18};
    std::vector<double> hit = {1.0};
    CHECK(loss_bce(trace, hit) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
    std::vector<double> miss = {0.0};
    CHECK(loss_bce(trace, miss) ==
          doctest::Approx(-std::log(1.0 - 1e-12)).epsilon(1e-12));
}

TEST_CASE("loss equals an independently summed value") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    ForwardTrace trace;
    std::vector<double> targets;
    for (int l = 0; l < 7; ++l) {
        trace.probs.push_back(unit(rng));
        targets.push_back(rng() % 2 ? 1.0 : 0.0);
    }
    double manual = 0.0;
    for (int l = 0; l < 7; ++l)
        manual -= (targets[l] * std::log(trace.probs[l]) +
                   (1 - targets[l]) * std::log(1 - trace.probs[l]));
    manual /= 7;
    CHECK(loss_bce(trace, targets) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("targets_from validates the label range") {
    CHECK(targets_from({0, 2}, 3) == std::vector<double>{1.0, 0.0, 1.0});
    CHECK_THROWS_AS(targets_from({3}, 3), std::invalid_argument);
    CHECK_THROWS_AS(targets_from({-1}, 3), std::invalid_argument);
}

TEST_CASE("gradients vanish when predictions equal targets") {
    Vocabulary vocab = tiny_vocab();
    for (Variant v : {Variant::max_pool, Variant::label_attention}) {
        ModelConfig config = tiny_config(v, 2, 2, 2, 3);
        ModelParams params = ModelParams::zeros(config, vocab.size());
        ForwardTrace trace = forward(params, config, {"alpha", "beta"}, vocab);
        std::vector<double> targets(config.num_labels, 0.5);  // equals sigmoid(0)
        ParamGradients pg = backward_params(trace, params, config, targets);
        for (auto view : pg.field_views())
            for (double g : view) CHECK(g == 0.0);
        InputGradients ig = backward_input(trace, params, config, targets);
        for (double n : ig.norms) CHECK(n == 0.0);
    }
}

TEST_CASE("embedding rows of absent tokens get zero gradient") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::max_pool, 2, 2, 2, 3);
    ModelParams params = ModelParams::random_init(config, vocab.size(), 5);
    ForwardTrace trace = forward(params, config, {"alpha", "beta"}, vocab);
    ParamGradients pg =
        backward_params(trace, params, config, targets_from({0}, 3));
    for (int row : {0, 4, 5})  // pad, delta, gamma never appear
        for (double g : pg.embedding.row(row)) CHECK(g == 0.0);
    double alpha_norm = 0.0;
    for (double g : pg.embedding.row(2)) alpha_norm += std::abs(g);
    CHECK(alpha_norm > 0.0);
}

TEST_CASE("positions that win no pooling window get zero input gradient") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::max_pool, 1, 1, 1, 1);
    ModelParams params = ModelParams::zeros(config, vocab.size());
    params.embedding.at(2, 0) = 2.0;
    params.embedding.at(3, 0) = 1.0;
    params.conv_w.at(0, 0) = 1.0;
    params.out_w.at(0, 0) = 1.0;
    ForwardTrace trace = forward(params, config, {"alpha", "beta"}, vocab);
    InputGradients ig = backward_input(trace, params, config, targets_from({}, 1));
    CHECK(ig.norms[0] > 0.0);
    CHECK(ig.norms[1] == 0.0);
}

TEST_CASE("analytic gradients match finite differences on random instances") {
    for (Variant v : {Variant::max_pool, Variant::label_attention}) {
        gradcheck::Result r = gradcheck::run(v, 7000, 4);
        CHECK(r.checks > 0);
        CHECK(r.max_rel_err < 1e-4);
    }
}

TEST_CASE("predict matches forward and is deterministic") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::label_attention, 3, 2, 2, 4);
    ModelParams params = ModelParams::random_init(config, vocab.size(), 99);
    std::vector<std::string> tokens = {"alpha", "gamma", "beta"};
    auto p1 = predict(params, config, tokens, vocab);
    auto p2 = predict(params, config, tokens, vocab);
    CHECK(p1 == p2);
    CHECK(p1 == forward(params, config, tokens, vocab).probs);
}

TEST_CASE("permuting output rows permutes probabilities") {
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::max_pool, 2, 3, 2, 3);
    ModelParams params = ModelParams::random_init(config, vocab.size(), 31);
    std::vector<std::string> tokens = {"alpha", "beta", "gamma"};
    auto base = predict(params, config, tokens, vocab);
    ModelParams swapped = params;
    for (int f = 0; f < config.num_filters; ++f)
        std::swap(swapped.out_w.at(0, f), swapped.out_w.at(1, f));
    std::swap(swapped.out_b[0], swapped.out_b[1]);
    auto perm = predict(swapped, config, tokens, vocab);
    CHECK(perm[0] == base[1]);
    CHECK(perm[1] == base[0]);
    CHECK(perm[2] == base[2]);
}

namespace {

// Ten labels, each marked by a dedicated keyword; every document carries the
// keywords of its five truth labels. A random ranking scores P@5 around 0.5
// here, so a high score requires actually reading the keywords.
void separable_corpus(std::vector<Document>& train, std::vector<Document>& val,
                      Vocabulary& vocab) {
    std::map<std::string, long> counts;
    auto make_doc = [&counts](int i, const std::string& prefix) {
        Document doc;
        doc.doc_id = prefix + std::to_string(i);
        doc.patient_id = doc.doc_id;
        for (int off = 0; off < 5; ++off) {
            int label = (i + off) % 10;
            doc.labels.insert(label);
            doc.tokens.push_back("kw" + std::to_string(label));
        }
        doc.tokens.push_back("filler" + std::to_string(i % 3));
        for (const std::string& t : doc.tokens) ++counts[t];
        return doc;
    };
    for (int i = 0; i < 60; ++i) train.push_back(make_doc(i, "tr"));
    for (int i = 0; i < 15; ++i) val.push_back(make_doc(i * 7 + 3, "va"));
    vocab = Vocabulary::from_counts(counts, 1);
}

}  // namespace

TEST_CASE("training reduces loss and finds the separable solution") {
    std::vector<Document> train_docs, val_docs;
    Vocabulary vocab;
    separable_corpus(train_docs, val_docs, vocab);

    ModelConfig config = tiny_config(Variant::max_pool, 8, 8, 2, 10);
    config.dropout_p = 0.1;
    TrainConfig tc;
    tc.lr = 5e-3;
    tc.batch_size = 4;
    tc.max_epochs = 60;
    tc.patience = 20;
    tc.seed = 1;
    TrainResult result = train(config, train_docs, val_docs, vocab, tc);

    REQUIRE(result.history.size() >= 5);
    for (int e = 1; e < 5; ++e)
        CHECK(result.history[e].train_loss < result.history[e - 1].train_loss);
    CHECK(result.best_val_p5 >= 0.9);
    CHECK(result.best_epoch >= 0);
}

TEST_CASE("training is deterministic for a fixed seed") {
    std::vector<Document> train_docs, val_docs;
    Vocabulary vocab;
    separable_corpus(train_docs, val_docs, vocab);
    ModelConfig config = tiny_config(Variant::max_pool, 4, 4, 2, 10);
    config.dropout_p = 0.2;
    TrainConfig tc;
    tc.max_epochs = 3;
    tc.seed = 9;
    TrainResult a = train(config, train_docs, val_docs, vocab, tc);
    TrainResult b = train(config, train_docs, val_docs, vocab, tc);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].train_loss == b.history[e].train_loss);
        CHECK(a.history[e].val_p5 == b.history[e].val_p5);
    }
    CHECK(a.params.embedding.data == b.params.embedding.data);
}

TEST_CASE("zero learning rate leaves the initialization untouched") {
    std::vector<Document> train_docs, val_docs;
    Vocabulary vocab;
    separable_corpus(train_docs, val_docs, vocab);
    ModelConfig config = tiny_config(Variant::max_pool, 4, 4, 2, 10);
    TrainConfig tc;
    tc.lr = 0.0;
    tc.max_epochs = 2;
    tc.seed = 4;
    TrainResult result = train(config, train_docs, val_docs, vocab, tc);
    ModelParams init =
        ModelParams::random_init(config, vocab.size(), derive_seed(tc.seed, "init"));
    CHECK(result.params.embedding.data == init.embedding.data);
    CHECK(result.params.conv_w.data == init.conv_w.data);
    CHECK(result.params.out_w.data == init.out_w.data);
}

TEST_CASE("absurd learning rate aborts with a numerical error") {
    std::vector<Document> train_docs, val_docs;
    Vocabulary vocab;
    separable_corpus(train_docs, val_docs, vocab);
    ModelConfig config = tiny_config(Variant::max_pool, 4, 4, 2, 10);
    config.dropout_p = 0.2;
    TrainConfig tc;
    tc.lr = 1e200;
    tc.max_epochs = 5;
    tc.seed = 2;
    CHECK_THROWS_AS(train(config, train_docs, val_docs, vocab, tc), NumericalError);
}

TEST_CASE("checkpoints round-trip bitwise") {
    TempDir tmp;
    Vocabulary vocab = tiny_vocab();
    for (Variant v : {Variant::max_pool, Variant::label_attention}) {
        ModelConfig config = tiny_config(v, 3, 2, 2, 6);
        config.dropout_p = 0.2;
        ModelParams params = ModelParams::random_init(config, vocab.size(), 77);
        std::string path = tmp.file("model.ckpt");
        save_checkpoint(path, params, config, vocab.fingerprint());

        Checkpoint ckpt = load_checkpoint(path);
        CHECK(ckpt.config.num_labels == 6);
        CHECK(ckpt.config.variant == v);
        CHECK(ckpt.vocab_fingerprint == vocab.fingerprint());
        CHECK(ckpt.params.embedding.data == params.embedding.data);
        CHECK(ckpt.params.conv_w.data == params.conv_w.data);
        CHECK(ckpt.params.out_b == params.out_b);
        if (v == Variant::label_attention)
            CHECK(ckpt.params.attn_w.data == params.attn_w.data);

        std::string second = tmp.file("model2.ckpt");
        save_checkpoint(second, ckpt.params, ckpt.config, ckpt.vocab_fingerprint);
        CHECK(read_text_file(path) == read_text_file(second));
    }
}

TEST_CASE("corrupt checkpoints fail loudly") {
    TempDir tmp;
    Vocabulary vocab = tiny_vocab();
    ModelConfig config = tiny_config(Variant::max_pool, 3, 2, 2, 6);
    ModelParams params = ModelParams::random_init(config, vocab.size(), 8);
    std::string path = tmp.file("model.ckpt");
    save_checkpoint(path, params, config, vocab.fingerprint());
    std::string bytes = read_text_file(path);

    SUBCASE("truncated file") {
        write_text_file(tmp.file("trunc.ckpt"), bytes.substr(0, bytes.size() / 2));
        try {
            load_checkpoint(tmp.file("trunc.ckpt"));
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }
    SUBCASE("label count edited in the header") {
        std::string edited = bytes;
        auto pos = edited.find("\"num_labels\":6");
        REQUIRE(pos != std::string::npos);
        edited.replace(pos, 14, "\"num_labels\":5");
        write_text_file(tmp.file("edited.ckpt"), edited);
        try {
            load_checkpoint(tmp.file("edited.ckpt"));
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("shape mismatch") != std::string::npos);
        }
    }
    SUBCASE("unsupported version") {
        std::string edited = bytes;
        auto pos = edited.find("\"format_version\":\"1\"");
        REQUIRE(pos != std::string::npos);
        edited.replace(pos, 20, "\"format_version\":\"9\"");
        write_text_file(tmp.file("ver.ckpt"), edited);
        CHECK_THROWS_AS(load_checkpoint(tmp.file("ver.ckpt")), DataError);
    }
    SUBCASE("trailing bytes") {
        write_text_file(tmp.file("extra.ckpt"), bytes + "xx");
        try {
            load_checkpoint(tmp.file("extra.ckpt"));
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("trailing") != std::string::npos);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint(tmp.file("nope.ckpt")), DataError);
    }
}
