#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "absa/model.hpp"
#include "absa/params.hpp"
#include "absa/rng.hpp"
#include "absa/tensor.hpp"

namespace absa {

// Which embedding rows are never perturbed. AE excludes padding only; ASC
// additionally excludes [CLS] and [SEP], changing only the words of the
// sentence.
enum class ExclusionPolicy { PaddingOnly, PaddingAndSpecials };

inline ExclusionPolicy exclusion_policy_for(Task task) {
    return task == Task::AspectExtraction ? ExclusionPolicy::PaddingOnly
                                          : ExclusionPolicy::PaddingAndSpecials;
}

struct AdvConfig {
    double epsilon = 0.0;  // L2 size of the perturbation
    ExclusionPolicy policy = ExclusionPolicy::PaddingOnly;
    bool enabled = false;

    void validate() const {
        if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    }

    // Training-path convention: epsilon == 0 means adversarial training off.
    static AdvConfig for_task(Task task, double epsilon) {
        AdvConfig cfg;
        cfg.epsilon = epsilon;
        cfg.policy = exclusion_policy_for(task);
        cfg.enabled = epsilon > 0.0;
        cfg.validate();
        return cfg;
    }
};

// r_adv with its bookkeeping. Excluded rows are exactly zero; for every
// non-degenerate example the Frobenius norm of its rows equals epsilon.
template <typename Real>
struct PerturbationT {
    TensorT<Real> r_adv;                    // [B,L,d], constant w.r.t. every gradient
    std::vector<std::uint8_t> excluded;     // B*L row flags
    std::vector<double> grad_norms;         // per example, over non-excluded rows
    std::vector<std::uint8_t> degenerate;   // per example: masked gradient ~ 0

    std::size_t degenerate_count() const {
        std::size_t n = 0;
        for (auto d : degenerate) n += d;
        return n;
    }
};

// g = grad_x log p(y|x; theta_hat): one forward/backward against the
// detached parameter view. Gradients produced by this pass never reach the
// parameters (that is the point of the constant copy), so they need no
// cleanup. Returns a plain tensor.
template <typename Real>
TensorT<Real> input_gradient(const ModelT<Real>& model, const Batch& batch,
                             const ParamViewT<Real>& view, Rng* dropout_rng, bool training) {
    if (!view.detached()) {
        throw UsageError("input_gradient requires the detached parameter view (theta_hat)");
    }
    TapeT<Real> tape;
    ModelOutput<Real> out =
        model.forward(tape, batch, view, dropout_rng, training, nullptr, /*capture_input_grad=*/true);
    tape.backward(out.loss);

    TensorT<Real> g(out.embeddings.shape());
    if (out.embeddings.grad_allocated()) {
        const auto& dx = out.embeddings.grad_view();
        auto& gv = g.values();
        // log p = -loss, so g = -dloss/dx.
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = -dx[i];
    }
    return g;
}

// Eq. of the fast gradient method: r_adv = -epsilon * g / ||g||_2, with the
// norm taken per example over non-excluded (token x dimension) entries.
// Examples whose masked gradient vanishes get an all-zero perturbation and a
// degenerate flag instead of a division by zero.
template <typename Real>
PerturbationT<Real> fgm_perturbation(const TensorT<Real>& g, const AdvConfig& cfg, const Batch& batch) {
    cfg.validate();
    Shape expected{batch.size, batch.seq_len, g.shape().back()};
    if (g.shape() != expected) {
        throw UsageError("gradient shape " + shape_str(g.shape()) + " does not match the batch " +
                         shape_str(expected));
    }
    std::size_t dim = g.shape().back();

    PerturbationT<Real> pert;
    pert.r_adv = TensorT<Real>(g.shape(), Real(0));
    pert.excluded.resize(batch.size * batch.seq_len);
    pert.grad_norms.assign(batch.size, 0.0);
    pert.degenerate.assign(batch.size, 0);

    for (std::size_t r = 0; r < pert.excluded.size(); ++r) {
        bool padding = batch.attention_mask[r] == 0;
        bool special = batch.special[r] != 0;
        pert.excluded[r] =
            padding || (cfg.policy == ExclusionPolicy::PaddingAndSpecials && special) ? 1 : 0;
    }

    const auto& gv = g.values();
    auto& rv = pert.r_adv.values();
    for (std::size_t b = 0; b < batch.size; ++b) {
        double sq = 0.0;
        for (std::size_t l = 0; l < batch.seq_len; ++l) {
            std::size_t row = b * batch.seq_len + l;
            if (pert.excluded[row]) continue;
            for (std::size_t j = 0; j < dim; ++j) {
                double v = static_cast<double>(gv[row * dim + j]);
                sq += v * v;
            }
        }
        double norm = std::sqrt(sq);
        pert.grad_norms[b] = norm;
        if (norm < 1e-12) {
            pert.degenerate[b] = 1;
            continue;  // rows stay zero
        }
        if (cfg.epsilon == 0.0) continue;
        Real factor = Real(-cfg.epsilon / norm);
        for (std::size_t l = 0; l < batch.seq_len; ++l) {
            std::size_t row = b * batch.seq_len + l;
            if (pert.excluded[row]) continue;
            for (std::size_t j = 0; j < dim; ++j) {
                rv[row * dim + j] = factor * gv[row * dim + j];
            }
        }
    }
    return pert;
}

// Forward pass on x + r_adv with the original labels. Gradients flow into
// the live parameters; r_adv stays constant.
template <typename Real>
TensorT<Real> adversarial_loss(TapeT<Real>& tape, const ModelT<Real>& model, const Batch& batch,
                               const ParamViewT<Real>& view, const TensorT<Real>& r_adv,
                               Rng* dropout_rng, bool training) {
    return model.forward(tape, batch, view, dropout_rng, training, &r_adv).loss;
}

struct StepReport {
    double clean_loss = 0.0;
    double adversarial_loss = 0.0;
    double total_loss = 0.0;
    std::size_t degenerate_examples = 0;
};

// One training step: with adversarial training off this is exactly the
// baseline fine-tuning step (same RNG draws, same updates). With it on, the
// perturbation is built against theta_hat, then the clean and adversarial
// losses both backpropagate into theta before a single optimizer step on
// their sum.
template <typename Real>
StepReport combined_step(const ModelT<Real>& model, const Batch& batch, ParamSetT<Real>& params,
                         const AdvConfig& cfg, Rng& dropout_rng) {
    cfg.validate();
    StepReport report;
    if (!cfg.enabled) {
        TapeT<Real> tape;
        ModelOutput<Real> out = model.forward(tape, batch, params.view(), &dropout_rng, true);
        tape.backward(out.loss);
        params.adam_step();
        report.clean_loss = static_cast<double>(out.loss.scalar_value());
        report.total_loss = report.clean_loss;
        return report;
    }

    TensorT<Real> g = input_gradient(model, batch, params.detached_view(), &dropout_rng, true);
    PerturbationT<Real> pert = fgm_perturbation(g, cfg, batch);

    TapeT<Real> tape;
    ModelOutput<Real> clean = model.forward(tape, batch, params.view(), &dropout_rng, true);
    tape.backward(clean.loss);
    TensorT<Real> adv =
        adversarial_loss(tape, model, batch, params.view(), pert.r_adv, &dropout_rng, true);
    tape.backward(adv);
    params.adam_step();

    report.clean_loss = static_cast<double>(clean.loss.scalar_value());
    report.adversarial_loss = static_cast<double>(adv.scalar_value());
    report.total_loss = report.clean_loss + report.adversarial_loss;
    report.degenerate_examples = pert.degenerate_count();
    return report;
}

using Perturbation = PerturbationT<float>;

}  // namespace absa
