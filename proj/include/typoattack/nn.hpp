#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "typoattack/corpus.hpp"

namespace typoattack {

// Dense row-major matrix of doubles. Small and explicit on purpose: every
// forward and backward pass below is written against it by hand.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
    bool empty() const { return data.empty(); }
};

enum class Variant { max_pool, label_attention };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Hyperparameters of one classifier. Activation is tanh throughout.
struct ModelConfig {
    Variant variant = Variant::max_pool;
    int embed_dim = 50;
    int num_filters = 100;
    int kernel_width = 4;
    int num_labels = 50;
    double dropout_p = 0.2;  // applied to embedded rows, training only

    void validate() const;
};

// All weights of one model. conv_w row f holds the kernel of filter f as k
// concatenated d-vectors. attn_w is empty for the max_pool variant.
// Row kPadId of embedding is pinned to zero and never updated.
struct ModelParams {
    Mat embedding;               // V x d
    Mat conv_w;                  // F x (k*d)
    std::vector<double> conv_b;  // F
    Mat attn_w;                  // L x F (label_attention only)
    Mat out_w;                   // L x F
    std::vector<double> out_b;   // L

    static ModelParams zeros(const ModelConfig& config, int vocab_size);
    static ModelParams random_init(const ModelConfig& config, int vocab_size,
                                   std::uint64_t seed);

    // Flat views over every field in checkpoint order; shared by the Adam
    // update and the gradient checker.
    std::vector<std::span<double>> field_views();
    std::vector<std::span<const double>> field_views() const;
    static std::vector<std::string> field_names(const ModelConfig& config);

    bool all_finite() const;
};

// Gradients use the same shapes as the parameters they belong to.
using ParamGradients = ModelParams;

// Cached activations of one forward pass, enough to evaluate both parameter
// and input gradients without recomputation.
struct ForwardTrace {
    std::vector<int> token_ids;         // length N = max(real_tokens, k)
    int real_tokens = 0;                // positions >= real_tokens are pad
    Mat x;                              // N x d, embedded (after dropout if any)
    Mat conv_pre;                       // T x F with T = N - k + 1
    Mat conv_act;                       // T x F, tanh(conv_pre)
    std::vector<int> pool_argmax;       // F (max_pool): lowest winning row index
    std::vector<double> pooled;         // F (max_pool)
    Mat attn;                           // L x T (label_attention), rows sum to 1
    Mat pooled_per_label;               // L x F (label_attention)
    std::vector<double> logits;         // L
    std::vector<double> probs;          // L, sigmoid(logits)
    std::vector<double> dropout_scale;  // N, empty in eval mode
};

// Per-position loss gradients with respect to the embedded input vectors.
struct InputGradients {
    Mat grads;                  // N x d
    std::vector<double> norms;  // N, Euclidean
    int real_tokens = 0;
};

// Token lookup plus right-padding with pad_id up to kernel_width.
std::vector<int> encode_tokens(const std::vector<std::string>& tokens,
                               const Vocabulary& vocab, int kernel_width);

ForwardTrace forward(const ModelParams& params, const ModelConfig& config,
                     const std::vector<std::string>& tokens,
                     const Vocabulary& vocab);
ForwardTrace forward_ids(const ModelParams& params, const ModelConfig& config,
                         std::span<const int> ids, int real_tokens);
// Entry point below the embedding lookup; also the hook the finite
// difference tests use to perturb individual input vectors.
ForwardTrace forward_embedded(const ModelParams& params, const ModelConfig& config,
                              Mat x, std::vector<int> ids, int real_tokens,
                              std::vector<double> dropout_scale = {});

std::vector<double> targets_from(const std::set<int>& labels, int num_labels);

// Mean binary cross-entropy over labels, probabilities clamped to
// [1e-12, 1 - 1e-12].
double loss_bce(const ForwardTrace& trace, std::span<const double> targets);
double loss_bce(const ForwardTrace& trace, const std::set<int>& truth);

ParamGradients backward_params(const ForwardTrace& trace, const ModelParams& params,
                               const ModelConfig& config,
                               std::span<const double> targets);
InputGradients backward_input(const ForwardTrace& trace, const ModelParams& params,
                              const ModelConfig& config,
                              std::span<const double> targets);
InputGradients backward_input(const ForwardTrace& trace, const ModelParams& params,
                              const ModelConfig& config, const std::set<int>& truth);

// Deterministic eval-mode probabilities.
std::vector<double> predict(const ModelParams& params, const ModelConfig& config,
                            const std::vector<std::string>& tokens,
                            const Vocabulary& vocab);

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 16;
    int max_epochs = 50;
    int patience = 5;  // epochs without val P@5 improvement before stopping
    std::uint64_t seed = 0;
};

struct EpochStats {
    int epoch;
    double train_loss;
    double val_loss;
    double val_p5;
};

struct TrainResult {
    ModelParams params;  // best checkpoint by validation P@5
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_p5 = 0.0;
};

// Adam over shuffled length-bucketed mini-batches with row dropout on the
// embedded input; early stopping on validation P@5. Throws NumericalError
// when the loss goes non-finite.
TrainResult train(const ModelConfig& config, const std::vector<Document>& train_docs,
                  const std::vector<Document>& val_docs, const Vocabulary& vocab,
                  const TrainConfig& train_config);

// Checkpoint file: one JSON header line (format version, config, shapes,
// vocabulary fingerprint) followed by raw little-endian float64 arrays in
// field order.
struct Checkpoint {
    ModelParams params;
    ModelConfig config;
    std::uint64_t vocab_fingerprint = 0;
};

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelConfig& config, std::uint64_t vocab_fingerprint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace typoattack
