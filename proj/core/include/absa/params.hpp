#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "absa/error.hpp"
#include "absa/tensor.hpp"

namespace absa {

struct AdamConfig {
    double lr = 3e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename Real>
class ParamSetT;

// Read access to a parameter set, either live (gradients accumulate into the
// parameters) or detached (same values, gradient never flows).
template <typename Real>
class ParamViewT {
public:
    TensorT<Real> operator[](std::string_view name) const {
        const TensorT<Real>& p = set_->at(name);
        return detached_ ? p.detached() : p;
    }

    bool detached() const { return detached_; }

private:
    friend class ParamSetT<Real>;
    ParamViewT(const ParamSetT<Real>* set, bool detached) : set_(set), detached_(detached) {}

    const ParamSetT<Real>* set_;
    bool detached_;
};

// Named parameter tensors with optional Adam state. Names keep insertion
// order so checkpoints and traversals are deterministic.
template <typename Real>
class ParamSetT {
public:
    TensorT<Real>& create(const std::string& name, Shape shape) {
        if (params_.count(name)) throw UsageError("parameter '" + name + "' already exists");
        if (adam_) throw UsageError("cannot add parameters after the optimizer is attached");
        TensorT<Real> t{std::move(shape)};
        t.set_requires_grad(true);
        order_.push_back(name);
        return params_.emplace(name, std::move(t)).first->second;
    }

    TensorT<Real>& at(std::string_view name) {
        auto it = params_.find(std::string(name));
        if (it == params_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
        return it->second;
    }
    const TensorT<Real>& at(std::string_view name) const {
        auto it = params_.find(std::string(name));
        if (it == params_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
        return it->second;
    }

    bool contains(std::string_view name) const { return params_.count(std::string(name)) != 0; }
    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    std::size_t step_count() const { return step_; }

    ParamViewT<Real> view() const { return ParamViewT<Real>(this, false); }
    // The constant copy used when constructing perturbations: values are
    // shared, gradients are never recorded against it.
    ParamViewT<Real> detached_view() const { return ParamViewT<Real>(this, true); }

    void attach_adam(AdamConfig cfg) {
        if (adam_) throw UsageError("optimizer already attached");
        adam_ = cfg;
        for (const auto& name : order_) {
            const auto& p = params_.at(name);
            moments_.emplace(name, Moments{std::vector<Real>(p.size(), Real(0)),
                                           std::vector<Real>(p.size(), Real(0))});
        }
    }

    bool adam_attached() const { return adam_.has_value(); }
    const AdamConfig& adam_config() const {
        if (!adam_) throw UsageError("optimizer not attached");
        return *adam_;
    }

    // One bias-corrected Adam update over every parameter with a populated
    // gradient; gradients are cleared afterwards.
    void adam_step() {
        if (!adam_) throw UsageError("adam_step: optimizer not attached");
        bool any_grad = false;
        for (auto& name : order_) {
            if (params_.at(name).grad_allocated()) {
                any_grad = true;
                break;
            }
        }
        if (!any_grad) throw UsageError("adam_step called before backward");

        ++step_;
        const double bc1 = 1.0 - std::pow(adam_->beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(adam_->beta2, static_cast<double>(step_));
        const Real beta1 = Real(adam_->beta1);
        const Real beta2 = Real(adam_->beta2);
        const Real one_m_b1 = Real(1.0 - adam_->beta1);
        const Real one_m_b2 = Real(1.0 - adam_->beta2);
        const Real eps = Real(adam_->eps);
        const Real lr = Real(adam_->lr);
        const Real inv_bc1 = Real(1.0 / bc1);
        const Real inv_bc2 = Real(1.0 / bc2);

        for (auto& name : order_) {
            TensorT<Real>& p = params_.at(name);
            if (!p.grad_allocated()) continue;
            const auto& g = p.grad_view();
            Moments& mo = moments_.at(name);
            auto& vals = p.values();
            for (std::size_t i = 0; i < vals.size(); ++i) {
                mo.m[i] = beta1 * mo.m[i] + one_m_b1 * g[i];
                mo.v[i] = beta2 * mo.v[i] + one_m_b2 * g[i] * g[i];
                Real m_hat = mo.m[i] * inv_bc1;
                Real v_hat = mo.v[i] * inv_bc2;
                vals[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
            }
            p.drop_grad();
        }
    }

    void zero_grads() {
        for (auto& name : order_) params_.at(name).drop_grad();
    }

    bool any_grad_allocated() const {
        for (const auto& name : order_) {
            if (params_.at(name).grad_allocated()) return true;
        }
        return false;
    }

    // Deep copy of values only (fresh gradient/optimizer state).
    ParamSetT snapshot_values() const {
        ParamSetT out;
        for (const auto& name : order_) {
            const TensorT<Real>& p = params_.at(name);
            TensorT<Real>& q = out.create(name, p.shape());
            q.values() = p.values();
        }
        return out;
    }

    // Overwrites values from another set with identical names and shapes.
    void load_values(const ParamSetT& other) {
        if (other.order_ != order_) throw UsageError("parameter name sets differ");
        for (const auto& name : order_) {
            TensorT<Real>& p = params_.at(name);
            const TensorT<Real>& q = other.params_.at(name);
            if (p.shape() != q.shape()) {
                throw ShapeError("parameter '" + name + "' shape mismatch: " + shape_str(p.shape()) +
                                 " vs " + shape_str(q.shape()));
            }
            p.values() = q.values();
        }
    }

private:
    struct Moments {
        std::vector<Real> m, v;
    };

    std::vector<std::string> order_;
    std::unordered_map<std::string, TensorT<Real>> params_;
    std::optional<AdamConfig> adam_;
    std::unordered_map<std::string, Moments> moments_;
    std::size_t step_ = 0;
};

using ParamSet = ParamSetT<float>;
using ParamView = ParamViewT<float>;

}  // namespace absa
