#include <doctest.h>

#include <vector>

#include "absa/ops.hpp"
#include "absa/rng.hpp"
#include "test_support.hpp"

using namespace absa;
using absa::test::check_gradients;
using absa::test::fill_uniform;

namespace {

using DTensor = TensorT<double>;
using DTape = TapeT<double>;

// Reduces an arbitrary tensor to a scalar through a fixed random linear
// functional, so its gradient check covers the whole output.
DTensor weighted_sum(DTape& tape, const DTensor& t, const DTensor& weights) {
    DTensor flat = reshape(tape, t, {1, t.size()});
    DTensor col = reshape(tape, weights, {t.size(), 1});
    return reshape(tape, matmul(tape, flat, col), {1});
}

DTensor make_weights(std::size_t n, Rng& rng) {
    DTensor w({n});
    fill_uniform(w, rng, -1.0, 1.0);
    return w;
}

constexpr double kTol = 1e-4;
constexpr int kTrials = 20;

}  // namespace

TEST_CASE("gradcheck: add with broadcasting") {
    Rng rng(101);
    for (int t = 0; t < kTrials; ++t) {
        Shape sa = absa::test::random_shape(rng, 1 + rng.next_below(3));
        // Derive a broadcast-compatible partner by flattening random dims to 1
        // and optionally dropping leading ones.
        Shape sb = sa;
        for (auto& e : sb) {
            if (rng.next_uniform() < 0.4) e = 1;
        }
        while (sb.size() > 1 && rng.next_uniform() < 0.3) sb.erase(sb.begin());

        DTensor a(sa), b(sb);
        fill_uniform(a, rng);
        fill_uniform(b, rng);
        a.set_requires_grad(true);
        b.set_requires_grad(true);
        DTensor w = make_weights(shape_size(detail::broadcast_shape(sa, sb, "add")), rng);

        auto result = check_gradients(
            [&](DTape& tape) { return weighted_sum(tape, add(tape, a, b), w); },
            {{"a", a}, {"b", b}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: scale and reshape and transpose") {
    Rng rng(102);
    for (int t = 0; t < kTrials; ++t) {
        Shape s = absa::test::random_shape(rng, 3, 4);
        DTensor x(s);
        fill_uniform(x, rng);
        x.set_requires_grad(true);
        DTensor w = make_weights(x.size(), rng);

        std::vector<std::size_t> perm = {0, 1, 2};
        Rng shuffler = rng.stream("perm", static_cast<std::uint64_t>(t));
        shuffler.shuffle(perm);
        double factor = -2.0 + 4.0 * rng.next_uniform();

        auto result = check_gradients(
            [&](DTape& tape) {
                DTensor y = scale(tape, x, factor);
                y = transpose(tape, y, perm);
                y = reshape(tape, y, {y.size()});
                return weighted_sum(tape, y, w);
            },
            {{"x", x}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: matmul chain matches central differences") {
    Rng rng(103);
    for (int t = 0; t < kTrials; ++t) {
        std::size_t m = 1 + rng.next_below(4), k = 1 + rng.next_below(4), n = 1 + rng.next_below(4);
        DTensor a({m, k}), b({k, n});
        fill_uniform(a, rng);
        fill_uniform(b, rng);
        a.set_requires_grad(true);
        b.set_requires_grad(true);
        DTensor w = make_weights(m * n, rng);

        auto result = check_gradients(
            [&](DTape& tape) { return weighted_sum(tape, matmul(tape, a, b), w); },
            {{"a", a}, {"b", b}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: bmm") {
    Rng rng(104);
    for (int t = 0; t < kTrials; ++t) {
        std::size_t batch = 1 + rng.next_below(3);
        std::size_t m = 1 + rng.next_below(3), k = 1 + rng.next_below(3), n = 1 + rng.next_below(3);
        DTensor a({batch, m, k}), b({batch, k, n});
        fill_uniform(a, rng);
        fill_uniform(b, rng);
        a.set_requires_grad(true);
        b.set_requires_grad(true);
        DTensor w = make_weights(batch * m * n, rng);

        auto result = check_gradients(
            [&](DTape& tape) { return weighted_sum(tape, bmm(tape, a, b), w); },
            {{"a", a}, {"b", b}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: select and embedding") {
    Rng rng(105);
    for (int t = 0; t < kTrials; ++t) {
        std::size_t vocab = 3 + rng.next_below(5), dim = 1 + rng.next_below(4);
        DTensor table({vocab, dim});
        fill_uniform(table, rng);
        table.set_requires_grad(true);

        std::vector<int> ids(4);
        for (auto& id : ids) id = static_cast<int>(rng.next_below(vocab));
        std::size_t axis_index = rng.next_below(4);
        DTensor w = make_weights(dim, rng);

        auto result = check_gradients(
            [&](DTape& tape) {
                DTensor rows = embedding(tape, table, ids);       // [4, dim]
                DTensor row = select(tape, rows, 0, axis_index);  // [dim]
                return weighted_sum(tape, row, w);
            },
            {{"table", table}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: gelu") {
    Rng rng(106);
    for (int t = 0; t < kTrials; ++t) {
        DTensor x(absa::test::random_shape(rng, 2, 5));
        fill_uniform(x, rng, -3.0, 3.0);
        x.set_requires_grad(true);
        DTensor w = make_weights(x.size(), rng);

        auto result = check_gradients(
            [&](DTape& tape) { return weighted_sum(tape, gelu(tape, x), w); }, {{"x", x}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: softmax over a random axis") {
    Rng rng(107);
    for (int t = 0; t < kTrials; ++t) {
        Shape s = absa::test::random_shape(rng, 3, 4);
        int axis = static_cast<int>(rng.next_below(3));
        DTensor x(s);
        fill_uniform(x, rng, -4.0, 4.0);
        x.set_requires_grad(true);
        DTensor w = make_weights(x.size(), rng);

        auto result = check_gradients(
            [&](DTape& tape) { return weighted_sum(tape, softmax(tape, x, axis), w); }, {{"x", x}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: layer_norm for x, gamma and beta") {
    Rng rng(108);
    for (int t = 0; t < kTrials; ++t) {
        std::size_t rows = 1 + rng.next_below(4), dim = 2 + rng.next_below(5);
        DTensor x({rows, dim}), gamma({dim}), beta({dim});
        fill_uniform(x, rng, -2.0, 2.0);
        fill_uniform(gamma, rng, 0.5, 1.5);
        fill_uniform(beta, rng, -0.5, 0.5);
        x.set_requires_grad(true);
        gamma.set_requires_grad(true);
        beta.set_requires_grad(true);
        DTensor w = make_weights(rows * dim, rng);

        auto result = check_gradients(
            [&](DTape& tape) {
                return weighted_sum(tape, layer_norm(tape, x, gamma, beta, 1e-8), w);
            },
            {{"x", x}, {"gamma", gamma}, {"beta", beta}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: cross_entropy with ignore masks") {
    Rng rng(109);
    for (int t = 0; t < kTrials; ++t) {
        std::size_t n = 2 + rng.next_below(5), classes = 2 + rng.next_below(4);
        DTensor logits({n, classes});
        fill_uniform(logits, rng, -2.0, 2.0);
        logits.set_requires_grad(true);

        std::vector<int> labels(n);
        std::vector<std::uint8_t> mask(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng.next_below(classes));
            mask[i] = rng.next_uniform() < 0.7 ? 1 : 0;
            any |= mask[i] != 0;
        }
        if (!any) mask[0] = 1;

        auto result = check_gradients(
            [&](DTape& tape) { return cross_entropy(tape, logits, labels, mask); },
            {{"logits", logits}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("gradcheck: dropout with a replayed mask") {
    Rng rng(110);
    for (int t = 0; t < kTrials; ++t) {
        DTensor x(absa::test::random_shape(rng, 2, 5));
        fill_uniform(x, rng);
        x.set_requires_grad(true);
        DTensor w = make_weights(x.size(), rng);
        std::uint64_t mask_seed = rng.next_u64();

        auto result = check_gradients(
            [&](DTape& tape) {
                Rng mask_rng(mask_seed);  // same mask on every evaluation
                return weighted_sum(tape, dropout(tape, x, 0.4, true, mask_rng), w);
            },
            {{"x", x}});
        CAPTURE(result.worst);
        CHECK(result.max_rel_err < kTol);
    }
}

TEST_CASE("backward through a composite graph accumulates into shared inputs") {
    Rng rng(111);
    DTensor x({3, 3});
    fill_uniform(x, rng);
    x.set_requires_grad(true);
    DTensor w = make_weights(9, rng);

    // x is used twice; the check validates grad accumulation across uses.
    auto result = check_gradients(
        [&](DTape& tape) {
            DTensor y = matmul(tape, x, x);
            return weighted_sum(tape, y, w);
        },
        {{"x", x}});
    CAPTURE(result.worst);
    CHECK(result.max_rel_err < kTol);
}
