#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "absa/dataset.hpp"
#include "absa/ops.hpp"
#include "absa/params.hpp"
#include "absa/rng.hpp"
#include "absa/task.hpp"
#include "absa/tensor.hpp"

namespace absa {

// Encoder geometry and task selection. Desk-scale defaults train on CPU in
// minutes; the full-size 768/12/12 geometry is a valid configuration.
struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t hidden = 64;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t ff = 256;
    std::size_t max_len = 64;
    double dropout = 0.1;
    Task task = Task::AspectExtraction;

    void validate() const;
    std::size_t head_dim() const { return hidden / heads; }

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
    // Canonical one-line description used in run fingerprints.
    std::string fingerprint_text() const;
};

// One padded input batch, flattened row-major over [B, L].
struct Batch {
    Task task = Task::AspectExtraction;
    std::size_t size = 0;     // B
    std::size_t seq_len = 0;  // L after trimming trailing all-pad columns
    std::vector<int> token_ids;
    std::vector<int> segment_ids;
    std::vector<int> position_ids;
    std::vector<std::uint8_t> attention_mask;
    std::vector<std::uint8_t> special;  // [CLS]/[SEP]/padding map
    std::vector<int> labels;            // AE: B*L, ASC: B
    std::vector<std::uint8_t> score_mask;  // AE only
};

Batch make_ae_batch(const std::vector<AeExample>& examples, const std::vector<std::size_t>& indices);
Batch make_asc_batch(const std::vector<AscExample>& examples, const std::vector<std::size_t>& indices);

template <typename Real>
struct ModelOutput {
    TensorT<Real> loss;
    TensorT<Real> logits;      // AE: [B,L,3], ASC: [B,3]
    TensorT<Real> embeddings;  // x, [B,L,d]: the perturbation injection site
    TensorT<Real> encoded;     // [B,L,d]
};

// BERT-style encoder: summed token/segment/position embeddings with
// layer-norm and dropout, post-LN transformer blocks (multi-head attention
// with an additive padding mask, GELU feed-forward), and a 3-way head that
// reads every position (AE) or position 0 (ASC).
template <typename Real>
class ModelT {
public:
    explicit ModelT(ModelConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const ModelConfig& config() const { return cfg_; }

    // Truncated normal (std 0.02, clip 2 std) for tables and weight
    // matrices, zeros for biases, ones/zeros for layer-norm affine.
    void init_params(ParamSetT<Real>& params, Rng rng) const {
        auto weight = [&](const std::string& name, Shape shape) {
            TensorT<Real>& t = params.create(name, std::move(shape));
            for (auto& v : t.values()) v = Real(rng.next_truncated_normal(0.02));
        };
        auto zeros = [&](const std::string& name, Shape shape) { params.create(name, std::move(shape)); };
        auto ones = [&](const std::string& name, Shape shape) {
            TensorT<Real>& t = params.create(name, std::move(shape));
            for (auto& v : t.values()) v = Real(1);
        };

        std::size_t d = cfg_.hidden;
        weight("emb.token", {cfg_.vocab_size, d});
        weight("emb.segment", {2, d});
        weight("emb.position", {cfg_.max_len, d});
        ones("emb.ln.gamma", {d});
        zeros("emb.ln.beta", {d});
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            std::string p = "enc" + std::to_string(l) + ".";
            weight(p + "attn.wq", {d, d});
            zeros(p + "attn.bq", {d});
            weight(p + "attn.wk", {d, d});
            zeros(p + "attn.bk", {d});
            weight(p + "attn.wv", {d, d});
            zeros(p + "attn.bv", {d});
            weight(p + "attn.wo", {d, d});
            zeros(p + "attn.bo", {d});
            ones(p + "attn.ln.gamma", {d});
            zeros(p + "attn.ln.beta", {d});
            weight(p + "ff.w1", {d, cfg_.ff});
            zeros(p + "ff.b1", {cfg_.ff});
            weight(p + "ff.w2", {cfg_.ff, d});
            zeros(p + "ff.b2", {d});
            ones(p + "ff.ln.gamma", {d});
            zeros(p + "ff.ln.beta", {d});
        }
        weight("head.w", {d, static_cast<std::size_t>(kNumClasses)});
        zeros("head.b", {static_cast<std::size_t>(kNumClasses)});
    }

    // Pre-norm embedding sum, exposed for the additivity contract.
    TensorT<Real> embed_sum(TapeT<Real>& tape, const Batch& batch,
                            const ParamViewT<Real>& view) const {
        TensorT<Real> tok = embedding(tape, view["emb.token"], batch.token_ids);
        TensorT<Real> seg = embedding(tape, view["emb.segment"], batch.segment_ids);
        TensorT<Real> pos = embedding(tape, view["emb.position"], batch.position_ids);
        return add(tape, add(tape, tok, seg), pos);
    }

    // Embedding-layer output x: sum, layer-norm, dropout. [B,L,d].
    TensorT<Real> embed(TapeT<Real>& tape, const Batch& batch, const ParamViewT<Real>& view,
                        Rng* dropout_rng, bool training) const {
        TensorT<Real> x = embed_sum(tape, batch, view);
        x = layer_norm(tape, x, view["emb.ln.gamma"], view["emb.ln.beta"], Real(1e-12));
        x = apply_dropout(tape, x, dropout_rng, training);
        return reshape(tape, x, {batch.size, batch.seq_len, cfg_.hidden});
    }

    // Transformer blocks over x. Padded keys are excluded from attention by
    // an additive large-negative bias before softmax.
    TensorT<Real> encode(TapeT<Real>& tape, TensorT<Real> x, const Batch& batch,
                         const ParamViewT<Real>& view, Rng* dropout_rng, bool training) const {
        std::size_t b = batch.size, len = batch.seq_len, d = cfg_.hidden;
        std::size_t h = cfg_.heads, hd = cfg_.head_dim();
        TensorT<Real> mask_bias = attention_bias(batch);

        TensorT<Real> flat = reshape(tape, x, {b * len, d});
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            std::string p = "enc" + std::to_string(l) + ".";

            auto heads_of = [&](TensorT<Real> t) {
                return transpose(tape, reshape(tape, t, {b, len, h, hd}), {0, 2, 1, 3});
            };
            TensorT<Real> q = heads_of(linear(tape, flat, view[p + "attn.wq"], view[p + "attn.bq"]));
            TensorT<Real> k = heads_of(linear(tape, flat, view[p + "attn.wk"], view[p + "attn.bk"]));
            TensorT<Real> v = heads_of(linear(tape, flat, view[p + "attn.wv"], view[p + "attn.bv"]));

            TensorT<Real> scores = bmm(tape, q, transpose(tape, k, {0, 1, 3, 2}));
            scores = scale(tape, scores, Real(1.0 / std::sqrt(static_cast<double>(hd))));
            scores = add(tape, scores, mask_bias);
            TensorT<Real> probs = softmax(tape, scores, -1);
            probs = apply_dropout(tape, probs, dropout_rng, training);

            TensorT<Real> ctx = transpose(tape, bmm(tape, probs, v), {0, 2, 1, 3});
            ctx = reshape(tape, ctx, {b * len, d});
            TensorT<Real> attn = linear(tape, ctx, view[p + "attn.wo"], view[p + "attn.bo"]);
            attn = apply_dropout(tape, attn, dropout_rng, training);
            flat = layer_norm(tape, add(tape, flat, attn), view[p + "attn.ln.gamma"],
                              view[p + "attn.ln.beta"], Real(1e-12));

            TensorT<Real> ffn = gelu(tape, linear(tape, flat, view[p + "ff.w1"], view[p + "ff.b1"]));
            ffn = linear(tape, ffn, view[p + "ff.w2"], view[p + "ff.b2"]);
            ffn = apply_dropout(tape, ffn, dropout_rng, training);
            flat = layer_norm(tape, add(tape, flat, ffn), view[p + "ff.ln.gamma"],
                              view[p + "ff.ln.beta"], Real(1e-12));
        }
        return reshape(tape, flat, {b, len, d});
    }

    // Per-position 3-way logits (AE) or [CLS] 3-way logits (ASC).
    TensorT<Real> head_logits(TapeT<Real>& tape, TensorT<Real> encoded, const Batch& batch,
                              const ParamViewT<Real>& view) const {
        if (cfg_.task == Task::AspectExtraction) {
            TensorT<Real> flat = reshape(tape, encoded, {batch.size * batch.seq_len, cfg_.hidden});
            TensorT<Real> logits = linear(tape, flat, view["head.w"], view["head.b"]);
            return reshape(tape, logits, {batch.size, batch.seq_len, static_cast<std::size_t>(kNumClasses)});
        }
        TensorT<Real> cls = select(tape, encoded, 1, 0);  // [B,d]
        return linear(tape, cls, view["head.w"], view["head.b"]);
    }

    // Mean cross-entropy over scored subword positions (AE) or examples (ASC).
    TensorT<Real> loss_from_logits(TapeT<Real>& tape, TensorT<Real> logits, const Batch& batch) const {
        if (batch.task != cfg_.task) {
            throw UsageError("batch task does not match the configured model task");
        }
        if (cfg_.task == Task::AspectExtraction) {
            if (batch.labels.size() != batch.size * batch.seq_len) {
                throw UsageError("AE batch labels must cover every position");
            }
            TensorT<Real> flat =
                reshape(tape, logits, {batch.size * batch.seq_len, static_cast<std::size_t>(kNumClasses)});
            return cross_entropy(tape, flat, batch.labels, batch.score_mask);
        }
        if (batch.labels.size() != batch.size) {
            throw UsageError("ASC batch labels must cover every example");
        }
        return cross_entropy(tape, logits, batch.labels);
    }

    // Full pass. `perturbation`, when given, is added to the embedding output
    // x (it is a constant: no gradient flows into it). With
    // `capture_input_grad` the returned embeddings tensor accumulates
    // d loss / d x during backward.
    ModelOutput<Real> forward(TapeT<Real>& tape, const Batch& batch, const ParamViewT<Real>& view,
                              Rng* dropout_rng, bool training,
                              const TensorT<Real>* perturbation = nullptr,
                              bool capture_input_grad = false) const {
        ModelOutput<Real> out;
        TensorT<Real> x = embed(tape, batch, view, dropout_rng, training);
        if (capture_input_grad) x.set_requires_grad(true);
        out.embeddings = x;
        if (perturbation) {
            if (perturbation->shape() != x.shape()) {
                throw UsageError("perturbation shape " + shape_str(perturbation->shape()) +
                                 " does not match embeddings " + shape_str(x.shape()));
            }
            x = add(tape, x, *perturbation);
        }
        out.encoded = encode(tape, x, batch, view, dropout_rng, training);
        out.logits = head_logits(tape, out.encoded, batch, view);
        out.loss = loss_from_logits(tape, out.logits, batch);
        return out;
    }

private:
    TensorT<Real> linear(TapeT<Real>& tape, TensorT<Real> x, TensorT<Real> w, TensorT<Real> bias) const {
        return add(tape, matmul(tape, x, w), bias);
    }

    TensorT<Real> apply_dropout(TapeT<Real>& tape, TensorT<Real> x, Rng* rng, bool training) const {
        if (!training || cfg_.dropout == 0.0) return x;
        if (!rng) throw UsageError("training forward needs a dropout RNG stream");
        return dropout(tape, x, cfg_.dropout, true, *rng);
    }

    // [B,1,1,L] additive bias: 0 on real tokens, -1e9 on padded keys.
    TensorT<Real> attention_bias(const Batch& batch) const {
        TensorT<Real> bias({batch.size, 1, 1, batch.seq_len});
        auto& v = bias.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = batch.attention_mask[i] ? Real(0) : Real(-1e9);
        }
        return bias;
    }

    ModelConfig cfg_;
};

using Model = ModelT<float>;

}  // namespace absa
