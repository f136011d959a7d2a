#pragma once

// Shared test utilities. The finite-difference checker is the independent
// oracle for every analytic gradient in the library: it only ever evaluates
// forward passes, so it cannot inherit a bug from the backward sweep it is
// checking.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "absa/rng.hpp"
#include "absa/tensor.hpp"

namespace absa::test {

inline void fill_uniform(TensorT<double>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.values()) v = lo + (hi - lo) * rng.next_uniform();
}

inline void fill_uniform(TensorT<float>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.values()) v = static_cast<float>(lo + (hi - lo) * rng.next_uniform());
}

inline Shape random_shape(Rng& rng, std::size_t rank, std::size_t max_extent = 5) {
    Shape s(rank);
    for (auto& e : s) e = 1 + rng.next_below(max_extent);
    return s;
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst;  // which tensor/entry was worst, for failure messages
};

// Central-difference check of d loss / d input for every entry of every
// watched tensor. `make_loss` must rebuild the graph from the current tensor
// values on each call (it is invoked 2 * total_entries + 1 times).
inline GradCheckResult check_gradients(
    const std::function<TensorT<double>(TapeT<double>&)>& make_loss,
    const std::vector<std::pair<std::string, TensorT<double>>>& inputs, double h = 1e-5) {
    // Analytic pass.
    std::vector<std::vector<double>> analytic;
    {
        TapeT<double> tape;
        TensorT<double> loss = make_loss(tape);
        tape.backward(loss);
        for (auto& [name, t] : inputs) {
            TensorT<double> copy = t;
            analytic.push_back(copy.grad_allocated() ? copy.grad_view()
                                                     : std::vector<double>(copy.size(), 0.0));
            copy.drop_grad();
        }
    }

    GradCheckResult result;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        TensorT<double> t = inputs[k].second;
        auto& vals = t.values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            double saved = vals[i];
            vals[i] = saved + h;
            double f_plus;
            {
                TapeT<double> tape;
                f_plus = make_loss(tape).scalar_value();
            }
            vals[i] = saved - h;
            double f_minus;
            {
                TapeT<double> tape;
                f_minus = make_loss(tape).scalar_value();
            }
            vals[i] = saved;

            double fd = (f_plus - f_minus) / (2.0 * h);
            double a = analytic[k][i];
            double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst = inputs[k].first + "[" + std::to_string(i) + "] analytic=" +
                               std::to_string(a) + " fd=" + std::to_string(fd);
            }
        }
    }
    return result;
}

inline std::string fixture_dir() {
    const char* dir = std::getenv("ABSA_TEST_FIXTURES");
    return dir ? dir : "tests/fixtures";
}

}  // namespace absa::test
