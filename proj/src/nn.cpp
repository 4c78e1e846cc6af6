#include "typoattack/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

#include "typoattack/errors.hpp"
#include "typoattack/hash.hpp"
#include "typoattack/metrics.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace typoattack {

using nlohmann::json;

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

const char* variant_name(Variant v) {
    return v == Variant::max_pool ? "max_pool" : "label_attention";
}

Variant variant_from_name(const std::string& name) {
    if (name == "max_pool") return Variant::max_pool;
    if (name == "label_attention") return Variant::label_attention;
    throw DataError("unknown model variant '" + name + "'");
}

void ModelConfig::validate() const {
    if (embed_dim < 1 || num_filters < 1 || kernel_width < 1 || num_labels < 1)
        throw std::invalid_argument("model config: dimensions must be >= 1");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
        throw std::invalid_argument("model config: dropout_p must be in [0, 1)");
}

ModelParams ModelParams::zeros(const ModelConfig& config, int vocab_size) {
    config.validate();
    if (vocab_size < 2)
        throw std::invalid_argument("model params: vocabulary must hold pad and unk");
    ModelParams p;
    p.embedding = Mat(vocab_size, config.embed_dim);
    p.conv_w = Mat(config.num_filters, config.kernel_width * config.embed_dim);
    p.conv_b.assign(config.num_filters, 0.0);
    if (config.variant == Variant::label_attention)
        p.attn_w = Mat(config.num_labels, config.num_filters);
    p.out_w = Mat(config.num_labels, config.num_filters);
    p.out_b.assign(config.num_labels, 0.0);
    return p;
}

ModelParams ModelParams::random_init(const ModelConfig& config, int vocab_size,
                                     std::uint64_t seed) {
    ModelParams p = zeros(config, vocab_size);
    std::mt19937_64 rng(seed);
    auto fill_uniform = [&rng](std::span<double> values, double limit) {
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : values) v = dist(rng);
    };
    fill_uniform({p.embedding.data.data(), p.embedding.data.size()}, 0.1);
    // Pad embedding stays the zero vector so padding is inert under the
    // convolution (up to the bias term); it is also excluded from updates.
    std::fill(p.embedding.row(Vocabulary::kPadId).begin(),
              p.embedding.row(Vocabulary::kPadId).end(), 0.0);
    double conv_limit =
        std::sqrt(6.0 / (config.kernel_width * config.embed_dim + config.num_filters));
    fill_uniform({p.conv_w.data.data(), p.conv_w.data.size()}, conv_limit);
    double out_limit = std::sqrt(6.0 / (config.num_filters + config.num_labels));
    if (config.variant == Variant::label_attention)
        fill_uniform({p.attn_w.data.data(), p.attn_w.data.size()}, out_limit);
    fill_uniform({p.out_w.data.data(), p.out_w.data.size()}, out_limit);
    return p;
}

std::vector<std::span<double>> ModelParams::field_views() {
    std::vector<std::span<double>> views;
    views.emplace_back(embedding.data);
    views.emplace_back(conv_w.data);
    views.emplace_back(conv_b);
    if (!attn_w.empty()) views.emplace_back(attn_w.data);
    views.emplace_back(out_w.data);
    views.emplace_back(out_b);
    return views;
}

std::vector<std::span<const double>> ModelParams::field_views() const {
    std::vector<std::span<const double>> views;
    views.emplace_back(embedding.data);
    views.emplace_back(conv_w.data);
    views.emplace_back(conv_b);
    if (!attn_w.empty()) views.emplace_back(attn_w.data);
    views.emplace_back(out_w.data);
    views.emplace_back(out_b);
    return views;
}

std::vector<std::string> ModelParams::field_names(const ModelConfig& config) {
    std::vector<std::string> names = {"embedding", "conv_w", "conv_b"};
    if (config.variant == Variant::label_attention) names.push_back("attn_w");
    names.push_back("out_w");
    names.push_back("out_b");
    return names;
}

bool ModelParams::all_finite() const {
    for (auto view : field_views())
        for (double v : view)
            if (!std::isfinite(v)) return false;
    return true;
}

std::vector<int> encode_tokens(const std::vector<std::string>& tokens,
                               const Vocabulary& vocab, int kernel_width) {
    std::vector<int> ids;
    ids.reserve(std::max<std::size_t>(tokens.size(), kernel_width));
    for (const std::string& token : tokens) ids.push_back(vocab.lookup(token));
    while (static_cast<int>(ids.size()) < kernel_width) ids.push_back(Vocabulary::kPadId);
    return ids;
}

ForwardTrace forward_embedded(const ModelParams& params, const ModelConfig& config,
                              Mat x, std::vector<int> ids, int real_tokens,
                              std::vector<double> dropout_scale) {
    const int d = config.embed_dim;
    const int F = config.num_filters;
    const int k = config.kernel_width;
    const int L = config.num_labels;
    const int n = static_cast<int>(x.rows);
    if (n < k) throw std::invalid_argument("forward: input shorter than kernel width");
    const int T = n - k + 1;

    ForwardTrace trace;
    trace.token_ids = std::move(ids);
    trace.real_tokens = real_tokens;
    trace.x = std::move(x);
    trace.dropout_scale = std::move(dropout_scale);
    trace.conv_pre = Mat(T, F);
    trace.conv_act = Mat(T, F);

    for (int t = 0; t < T; ++t) {
        for (int f = 0; f < F; ++f) {
            double acc = params.conv_b[f];
            const double* kernel = params.conv_w.data.data() + f * params.conv_w.cols;
            for (int j = 0; j < k; ++j) {
                const double* xr = trace.x.data.data() + (t + j) * d;
                const double* wr = kernel + j * d;
                for (int e = 0; e < d; ++e) acc += wr[e] * xr[e];
            }
            trace.conv_pre.at(t, f) = acc;
            trace.conv_act.at(t, f) = std::tanh(acc);
        }
    }

    trace.logits.assign(L, 0.0);
    if (config.variant == Variant::max_pool) {
        trace.pool_argmax.assign(F, 0);
        trace.pooled.assign(F, 0.0);
        for (int f = 0; f < F; ++f) {
            int best_t = 0;
            double best = trace.conv_act.at(0, f);
            for (int t = 1; t < T; ++t) {
                double v = trace.conv_act.at(t, f);
                if (v > best) {  // strict: ties go to the lowest position
                    best = v;
                    best_t = t;
                }
            }
            trace.pool_argmax[f] = best_t;
            trace.pooled[f] = best;
        }
        for (int l = 0; l < L; ++l)
            trace.logits[l] = params.out_b[l] + dot(params.out_w.row(l), trace.pooled);
    } else {
        trace.attn = Mat(L, T);
        trace.pooled_per_label = Mat(L, F);
        std::vector<double> scores(T);
        for (int l = 0; l < L; ++l) {
            double max_score = -std::numeric_limits<double>::infinity();
            for (int t = 0; t < T; ++t) {
                scores[t] = dot(params.attn_w.row(l), trace.conv_act.row(t));
                max_score = std::max(max_score, scores[t]);
            }
            double denom = 0.0;
            for (int t = 0; t < T; ++t) {
                double e = std::exp(scores[t] - max_score);
                trace.attn.at(l, t) = e;
                denom += e;
            }
            for (int t = 0; t < T; ++t) trace.attn.at(l, t) /= denom;
            for (int t = 0; t < T; ++t) {
                double alpha = trace.attn.at(l, t);
                for (int f = 0; f < F; ++f)
                    trace.pooled_per_label.at(l, f) += alpha * trace.conv_act.at(t, f);
            }
            trace.logits[l] =
                params.out_b[l] + dot(params.out_w.row(l), trace.pooled_per_label.row(l));
        }
    }

    trace.probs.resize(L);
    for (int l = 0; l < L; ++l) {
        if (!std::isfinite(trace.logits[l]))
            throw NumericalError("forward produced a non-finite logit");
        trace.probs[l] = sigmoid(trace.logits[l]);
    }
    return trace;
}

ForwardTrace forward_ids(const ModelParams& params, const ModelConfig& config,
                         std::span<const int> ids, int real_tokens) {
    // Trailing pad beyond max(real_tokens, kernel_width) is ignored, so batch
    // padding cannot change the result.
    const int n = std::max(real_tokens, config.kernel_width);
    if (static_cast<int>(ids.size()) < n)
        throw std::invalid_argument("forward_ids: id list shorter than effective length");
    Mat x(n, config.embed_dim);
    std::vector<int> used(ids.begin(), ids.begin() + n);
    for (int i = 0; i < n; ++i) {
        auto row = params.embedding.row(used[i]);
        std::copy(row.begin(), row.end(), x.row(i).begin());
    }
    return forward_embedded(params, config, std::move(x), std::move(used), real_tokens);
}

ForwardTrace forward(const ModelParams& params, const ModelConfig& config,
                     const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    if (tokens.empty()) throw std::invalid_argument("forward: empty token list");
    if (!params.all_finite()) throw NumericalError("forward: non-finite parameter");
    std::vector<int> ids = encode_tokens(tokens, vocab, config.kernel_width);
    return forward_ids(params, config, ids, static_cast<int>(tokens.size()));
}

std::vector<double> targets_from(const std::set<int>& labels, int num_labels) {
    std::vector<double> targets(num_labels, 0.0);
    for (int l : labels) {
        if (l < 0 || l >= num_labels)
            throw std::invalid_argument("label index " + std::to_string(l) +
                                        " outside [0, " + std::to_string(num_labels) + ")");
        targets[l] = 1.0;
    }
    return targets;
}

double loss_bce(const ForwardTrace& trace, std::span<const double> targets) {
    const int L = static_cast<int>(trace.probs.size());
    if (static_cast<int>(targets.size()) != L)
        throw std::invalid_argument("loss: target size mismatch");
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
        double p = std::clamp(trace.probs[l], kProbClamp, 1.0 - kProbClamp);
        total += targets[l] * std::log(p) + (1.0 - targets[l]) * std::log(1.0 - p);
    }
    return -total / L;
}

double loss_bce(const ForwardTrace& trace, const std::set<int>& truth) {
    return loss_bce(trace, targets_from(truth, static_cast<int>(trace.probs.size())));
}

namespace {

// Shared backward pass. Accumulates parameter gradients into *pg when given
// and writes input gradients (wrt the embedded rows in trace.x) into *dx.
void backward_core(const ForwardTrace& trace, const ModelParams& params,
                   const ModelConfig& config, std::span<const double> targets,
                   ParamGradients* pg, Mat* dx) {
    const int d = config.embed_dim;
    const int F = config.num_filters;
    const int k = config.kernel_width;
    const int L = config.num_labels;
    const int n = static_cast<int>(trace.x.rows);
    const int T = n - k + 1;
    if (static_cast<int>(targets.size()) != L)
        throw std::invalid_argument("backward: target size mismatch");

    // d(mean BCE)/d(logit) through the sigmoid.
    std::vector<double> dz(L);
    for (int l = 0; l < L; ++l) dz[l] = (trace.probs[l] - targets[l]) / L;

    Mat dH(T, F);
    if (config.variant == Variant::max_pool) {
        // Gradient reaches only each filter's argmax position.
        std::vector<double> dv(F, 0.0);
        for (int l = 0; l < L; ++l) {
            auto u = params.out_w.row(l);
            for (int f = 0; f < F; ++f) dv[f] += dz[l] * u[f];
            if (pg) {
                auto gu = pg->out_w.row(l);
                for (int f = 0; f < F; ++f) gu[f] += dz[l] * trace.pooled[f];
                pg->out_b[l] += dz[l];
            }
        }
        for (int f = 0; f < F; ++f) dH.at(trace.pool_argmax[f], f) += dv[f];
    } else {
        std::vector<double> dV(F);
        std::vector<double> dalpha(T);
        std::vector<double> da(T);
        for (int l = 0; l < L; ++l) {
            auto u = params.out_w.row(l);
            auto ua = params.attn_w.row(l);
            for (int f = 0; f < F; ++f) dV[f] = dz[l] * u[f];
            if (pg) {
                auto gu = pg->out_w.row(l);
                for (int f = 0; f < F; ++f) gu[f] += dz[l] * trace.pooled_per_label.at(l, f);
                pg->out_b[l] += dz[l];
            }
            double inner = 0.0;  // sum_s alpha_s * dalpha_s for the softmax Jacobian
            for (int t = 0; t < T; ++t) {
                dalpha[t] = dot(std::span<const double>(dV), trace.conv_act.row(t));
                inner += trace.attn.at(l, t) * dalpha[t];
            }
            for (int t = 0; t < T; ++t)
                da[t] = trace.attn.at(l, t) * (dalpha[t] - inner);
            if (pg) {
                auto gua = pg->attn_w.row(l);
                for (int t = 0; t < T; ++t) {
                    if (da[t] == 0.0) continue;
                    auto h = trace.conv_act.row(t);
                    for (int f = 0; f < F; ++f) gua[f] += da[t] * h[f];
                }
            }
            for (int t = 0; t < T; ++t) {
                double alpha = trace.attn.at(l, t);
                auto dh = dH.row(t);
                for (int f = 0; f < F; ++f) dh[f] += dV[f] * alpha + da[t] * ua[f];
            }
        }
    }

    // Through tanh, then the convolution.
    Mat dC(T, F);
    for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) {
            double h = trace.conv_act.at(t, f);
            dC.at(t, f) = dH.at(t, f) * (1.0 - h * h);
        }

    if (dx) *dx = Mat(n, d);
    for (int t = 0; t < T; ++t) {
        for (int f = 0; f < F; ++f) {
            double c = dC.at(t, f);
            if (c == 0.0) continue;
            const double* kernel = params.conv_w.data.data() + f * params.conv_w.cols;
            if (pg) {
                pg->conv_b[f] += c;
                double* gk = pg->conv_w.data.data() + f * pg->conv_w.cols;
                for (int j = 0; j < k; ++j) {
                    const double* xr = trace.x.data.data() + (t + j) * d;
                    double* gkr = gk + j * d;
                    for (int e = 0; e < d; ++e) gkr[e] += c * xr[e];
                }
            }
            if (dx) {
                for (int j = 0; j < k; ++j) {
                    double* dxr = dx->data.data() + (t + j) * d;
                    const double* wr = kernel + j * d;
                    for (int e = 0; e < d; ++e) dxr[e] += c * wr[e];
                }
            }
        }
    }

    if (pg) {
        // Embedding rows accumulate their positions' input gradients; the
        // dropout scale belongs to the chain (x_row = scale * embedding_row).
        Mat local;
        Mat* source = dx;
        if (!source) {
            local = Mat(n, d);
            source = &local;
            // dx was not requested: recompute it cheaply from dC.
            for (int t = 0; t < T; ++t)
                for (int f = 0; f < F; ++f) {
                    double c = dC.at(t, f);
                    if (c == 0.0) continue;
                    const double* kernel =
                        params.conv_w.data.data() + f * params.conv_w.cols;
                    for (int j = 0; j < k; ++j) {
                        double* dxr = local.data.data() + (t + j) * d;
                        const double* wr = kernel + j * d;
                        for (int e = 0; e < d; ++e) dxr[e] += c * wr[e];
                    }
                }
        }
        for (int i = 0; i < n; ++i) {
            double scale = trace.dropout_scale.empty() ? 1.0 : trace.dropout_scale[i];
            if (scale == 0.0) continue;
            double* grow = pg->embedding.data.data() + trace.token_ids[i] * d;
            const double* dxr = source->data.data() + i * d;
            for (int e = 0; e < d; ++e) grow[e] += scale * dxr[e];
        }
    }
}

}  // namespace

ParamGradients backward_params(const ForwardTrace& trace, const ModelParams& params,
                               const ModelConfig& config,
                               std::span<const double> targets) {
    ParamGradients pg = ModelParams::zeros(config, static_cast<int>(params.embedding.rows));
    backward_core(trace, params, config, targets, &pg, nullptr);
    return pg;
}

InputGradients backward_input(const ForwardTrace& trace, const ModelParams& params,
                              const ModelConfig& config,
                              std::span<const double> targets) {
    InputGradients ig;
    backward_core(trace, params, config, targets, nullptr, &ig.grads);
    ig.real_tokens = trace.real_tokens;
    ig.norms.resize(ig.grads.rows);
    for (std::size_t i = 0; i < ig.grads.rows; ++i) {
        double sq = 0.0;
        for (double v : ig.grads.row(i)) sq += v * v;
        ig.norms[i] = std::sqrt(sq);
    }
    return ig;
}

InputGradients backward_input(const ForwardTrace& trace, const ModelParams& params,
                              const ModelConfig& config, const std::set<int>& truth) {
    return backward_input(trace, params, config,
                          targets_from(truth, config.num_labels));
}

std::vector<double> predict(const ModelParams& params, const ModelConfig& config,
                            const std::vector<std::string>& tokens,
                            const Vocabulary& vocab) {
    return forward(params, config, tokens, vocab).probs;
}

namespace {

struct AdamState {
    ModelParams m, v;
    long step = 0;
};

void adam_update(ModelParams& params, ParamGradients& grads, AdamState& state,
                 const TrainConfig& tc) {
    ++state.step;
    double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(state.step));
    auto pviews = params.field_views();
    auto gviews = grads.field_views();
    auto mviews = state.m.field_views();
    auto vviews = state.v.field_views();
    for (std::size_t f = 0; f < pviews.size(); ++f) {
        auto p = pviews[f];
        auto g = gviews[f];
        auto m = mviews[f];
        auto v = vviews[f];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = tc.beta1 * m[i] + (1.0 - tc.beta1) * g[i];
            v[i] = tc.beta2 * v[i] + (1.0 - tc.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p[i] -= tc.lr * mhat / (std::sqrt(vhat) + tc.eps);
        }
    }
}

void zero_params(ModelParams& p) {
    for (auto view : p.field_views()) std::fill(view.begin(), view.end(), 0.0);
}

}  // namespace

TrainResult train(const ModelConfig& config, const std::vector<Document>& train_docs,
                  const std::vector<Document>& val_docs, const Vocabulary& vocab,
                  const TrainConfig& train_config) {
    config.validate();
    if (train_docs.empty()) throw std::invalid_argument("train: empty training set");
    if (val_docs.empty()) throw std::invalid_argument("train: empty validation set");
    if (config.num_labels < 5)
        throw std::invalid_argument("train: early stopping uses P@5, need >= 5 labels");

    struct Encoded {
        std::vector<int> ids;
        int real_tokens;
        std::vector<double> targets;
    };
    auto encode_all = [&](const std::vector<Document>& docs) {
        std::vector<Encoded> encoded;
        encoded.reserve(docs.size());
        for (const Document& doc : docs) {
            if (doc.tokens.empty())
                throw std::invalid_argument("train: document '" + doc.doc_id +
                                            "' has no tokens");
            encoded.push_back(Encoded{encode_tokens(doc.tokens, vocab, config.kernel_width),
                                      static_cast<int>(doc.tokens.size()),
                                      targets_from(doc.labels, config.num_labels)});
        }
        return encoded;
    };
    std::vector<Encoded> train_enc = encode_all(train_docs);
    std::vector<Encoded> val_enc = encode_all(val_docs);

    std::mt19937_64 rng(train_config.seed);
    ModelParams params = ModelParams::random_init(config, vocab.size(),
                                                  derive_seed(train_config.seed, "init"));
    AdamState adam{ModelParams::zeros(config, vocab.size()),
                   ModelParams::zeros(config, vocab.size())};
    ParamGradients grads = ModelParams::zeros(config, vocab.size());

    TrainResult result;
    result.best_val_p5 = -1.0;
    ModelParams best = params;
    int epochs_without_improvement = 0;

    for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
        // Shuffle, then bucket similar lengths into the same batch so padding
        // within a batch stays small; batch order is shuffled again.
        std::vector<std::size_t> order(train_enc.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return train_enc[a].real_tokens < train_enc[b].real_tokens;
        });
        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t start = 0; start < order.size();
             start += train_config.batch_size)
            batches.emplace_back(order.begin() + start,
                                 order.begin() +
                                     std::min(order.size(),
                                              start + train_config.batch_size));
        std::shuffle(batches.begin(), batches.end(), rng);

        double epoch_loss = 0.0;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            zero_params(grads);
            double batch_loss = 0.0;
            for (std::size_t idx : batch) {
                const Encoded& doc = train_enc[idx];
                int n = std::max(doc.real_tokens, config.kernel_width);
                std::vector<double> scale;
                if (config.dropout_p > 0.0) {
                    scale.resize(n);
                    double keep = 1.0 - config.dropout_p;
                    for (int i = 0; i < n; ++i)
                        scale[i] = unit(rng) < config.dropout_p ? 0.0 : 1.0 / keep;
                }
                Mat x(n, config.embed_dim);
                for (int i = 0; i < n; ++i) {
                    double s = scale.empty() ? 1.0 : scale[i];
                    auto row = params.embedding.row(doc.ids[i]);
                    for (int e = 0; e < config.embed_dim; ++e)
                        x.at(i, e) = s * row[e];
                }
                ForwardTrace trace = forward_embedded(
                    params, config, std::move(x),
                    std::vector<int>(doc.ids.begin(), doc.ids.begin() + n),
                    doc.real_tokens, std::move(scale));
                batch_loss += loss_bce(trace, doc.targets);
                backward_core(trace, params, config, doc.targets, &grads, nullptr);
            }
            if (!std::isfinite(batch_loss))
                throw NumericalError("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch) + " batch " +
                                     std::to_string(b));
            double inv = 1.0 / static_cast<double>(batch.size());
            for (auto view : grads.field_views())
                for (double& g : view) g *= inv;
            // The pad embedding row is frozen.
            std::fill(grads.embedding.row(Vocabulary::kPadId).begin(),
                      grads.embedding.row(Vocabulary::kPadId).end(), 0.0);
            adam_update(params, grads, adam, train_config);
            epoch_loss += batch_loss;
        }

        double val_loss = 0.0;
        double val_p5 = 0.0;
        for (std::size_t i = 0; i < val_enc.size(); ++i) {
            const Encoded& doc = val_enc[i];
            ForwardTrace trace = forward_ids(params, config, doc.ids, doc.real_tokens);
            val_loss += loss_bce(trace, doc.targets);
            std::vector<int> top = top_k_indices(trace.probs, 5);
            int hits = 0;
            for (int l : top)
                if (doc.targets[l] > 0.5) ++hits;
            val_p5 += static_cast<double>(hits) / 5.0;
        }
        val_loss /= static_cast<double>(val_enc.size());
        val_p5 /= static_cast<double>(val_enc.size());

        result.history.push_back(EpochStats{epoch,
                                            epoch_loss / static_cast<double>(train_enc.size()),
                                            val_loss, val_p5});
        if (val_p5 > result.best_val_p5) {
            result.best_val_p5 = val_p5;
            result.best_epoch = epoch;
            best = params;
            epochs_without_improvement = 0;
        } else if (++epochs_without_improvement >= train_config.patience) {
            break;
        }
    }

    result.params = std::move(best);
    return result;
}

namespace {

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

std::uint64_t fingerprint_from_hex(const std::string& hex) {
    if (hex.size() != 16) throw DataError("checkpoint: bad vocab fingerprint");
    return std::stoull(hex, nullptr, 16);
}

json shape_json(const ModelConfig& config, int vocab_size) {
    json shapes;
    shapes["embedding"] = {vocab_size, config.embed_dim};
    shapes["conv_w"] = {config.num_filters, config.kernel_width, config.embed_dim};
    shapes["conv_b"] = {config.num_filters};
    if (config.variant == Variant::label_attention)
        shapes["attn_w"] = {config.num_labels, config.num_filters};
    shapes["out_w"] = {config.num_labels, config.num_filters};
    shapes["out_b"] = {config.num_labels};
    return shapes;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelConfig& config, std::uint64_t vocab_fingerprint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    json header;
    header["format_version"] = "1";
    header["config"] = {{"variant", variant_name(config.variant)},
                        {"embed_dim", config.embed_dim},
                        {"num_filters", config.num_filters},
                        {"kernel_width", config.kernel_width},
                        {"num_labels", config.num_labels},
                        {"dropout_p", config.dropout_p}};
    header["vocab_fingerprint"] = fingerprint_hex(vocab_fingerprint);
    header["shapes"] = shape_json(config, static_cast<int>(params.embedding.rows));
    out << header.dump() << '\n';
    for (auto view : params.field_views())
        out.write(reinterpret_cast<const char*>(view.data()),
                  static_cast<std::streamsize>(view.size() * sizeof(double)));
    if (!out) throw DataError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError(path + ": missing header");
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.is_object())
        throw DataError(path + ": header is not valid JSON");
    if (!header.contains("format_version") || header["format_version"] != "1")
        throw DataError(path + ": unsupported format version");

    Checkpoint ckpt;
    try {
        const json& c = header.at("config");
        ckpt.config.variant = variant_from_name(c.at("variant").get<std::string>());
        ckpt.config.embed_dim = c.at("embed_dim").get<int>();
        ckpt.config.num_filters = c.at("num_filters").get<int>();
        ckpt.config.kernel_width = c.at("kernel_width").get<int>();
        ckpt.config.num_labels = c.at("num_labels").get<int>();
        ckpt.config.dropout_p = c.at("dropout_p").get<double>();
        ckpt.vocab_fingerprint =
            fingerprint_from_hex(header.at("vocab_fingerprint").get<std::string>());
    } catch (const json::exception& e) {
        throw DataError(path + ": bad header: " + e.what());
    }
    ckpt.config.validate();

    const json& shapes = header.contains("shapes") ? header["shapes"] : json::object();
    int vocab_size = 0;
    {
        if (!shapes.contains("embedding") || !shapes["embedding"].is_array() ||
            shapes["embedding"].size() != 2)
            throw DataError(path + ": shape mismatch for field 'embedding'");
        vocab_size = shapes["embedding"][0].get<int>();
        if (vocab_size < 2 || shapes["embedding"][1].get<int>() != ckpt.config.embed_dim)
            throw DataError(path + ": shape mismatch for field 'embedding'");
    }
    json expected = shape_json(ckpt.config, vocab_size);
    for (const auto& [field, shape] : expected.items()) {
        if (!shapes.contains(field) || shapes[field] != shape)
            throw DataError(path + ": shape mismatch for field '" + field + "'");
    }
    for (const auto& [field, shape] : shapes.items()) {
        (void)shape;
        if (!expected.contains(field))
            throw DataError(path + ": unexpected field '" + field + "'");
    }

    ckpt.params = ModelParams::zeros(ckpt.config, vocab_size);
    auto names = ModelParams::field_names(ckpt.config);
    auto views = ckpt.params.field_views();
    for (std::size_t f = 0; f < views.size(); ++f) {
        auto view = views[f];
        in.read(reinterpret_cast<char*>(view.data()),
                static_cast<std::streamsize>(view.size() * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != view.size() * sizeof(double))
            throw DataError(path + ": truncated in field '" + names[f] + "'");
    }
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1)
        throw DataError(path + ": trailing bytes after parameter arrays");
    return ckpt;
}

}  // namespace typoattack
