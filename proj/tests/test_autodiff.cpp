#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "helpers.hpp"
#include "lac/autodiff.hpp"

using namespace lac;
using ad::Var;
using testutil::random_tensor;

namespace {

// Central-difference check of d(loss)/d(inputs) for a graph builder that
// maps leaf tensors to a scalar loss. Every element of every
// grad-requiring input is probed.
void gradcheck(std::vector<Tensor<double>> inputs, const std::vector<bool>& needs_grad,
               const std::function<Var<double>(std::vector<Var<double>>&)>& build, double rtol = 1e-6,
               double atol = 1e-9) {
    std::vector<Var<double>> vars;
    for (size_t i = 0; i < inputs.size(); ++i) vars.push_back(Var<double>::leaf(inputs[i], needs_grad[i]));
    auto loss = build(vars);
    ad::backward(loss);

    auto eval = [&](const std::vector<Tensor<double>>& vals) {
        ad::NoGradGuard ng;
        std::vector<Var<double>> vs;
        for (const auto& v : vals) vs.push_back(Var<double>::constant(v));
        return build(vs).val().data[0];
    };

    for (size_t i = 0; i < inputs.size(); ++i) {
        if (!needs_grad[i]) continue;
        for (size_t j = 0; j < inputs[i].data.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(inputs[i].data[j]));
            auto perturbed = inputs;
            perturbed[i].data[j] += h;
            const double up = eval(perturbed);
            perturbed[i].data[j] -= 2 * h;
            const double dn = eval(perturbed);
            const double fd = (up - dn) / (2 * h);
            const double got = vars[i].grad().data[j];
            INFO("input ", i, " elem ", j, " fd=", fd, " ad=", got);
            CHECK(testutil::close(got, fd, rtol, atol));
        }
    }
}

Tensor<double> rand_weights(Shape s, uint64_t seed) {
    Rng rng(seed);
    return random_tensor<double>(std::move(s), rng, 0.5);
}

}  // namespace

TEST_CASE("elementwise op gradients") {
    Rng rng(1);
    auto a = random_tensor<double>({2, 3}, rng);
    auto b = random_tensor<double>({2, 3}, rng);
    auto w = rand_weights({2, 3}, 99);

    gradcheck({a, b}, {true, true}, [&](auto& v) { return ad::weighted_sum(ad::add(v[0], v[1]), w); });
    gradcheck({a, b}, {true, true}, [&](auto& v) { return ad::weighted_sum(ad::sub(v[0], v[1]), w); });
    gradcheck({a, b}, {true, true}, [&](auto& v) { return ad::weighted_sum(ad::mul(v[0], v[1]), w); });
    gradcheck({a}, {true}, [&](auto& v) { return ad::weighted_sum(ad::scale(v[0], -1.7), w); });
    gradcheck({a}, {true}, [&](auto& v) { return ad::weighted_sum(ad::swish(v[0]), w); });
    gradcheck({a}, {true}, [&](auto& v) { return ad::weighted_sum(ad::tanh_op(v[0]), w); });
}

TEST_CASE("conv and linear gradients") {
    Rng rng(2);
    auto x = random_tensor<double>({2, 2, 5, 4}, rng);
    auto cw = random_tensor<double>({3, 2, 3, 3}, rng, 0.4);
    auto cb = random_tensor<double>({3}, rng);
    auto w = rand_weights({2, 3, 5, 4}, 98);
    gradcheck({x, cw, cb}, {true, true, true}, [&](auto& v) {
        return ad::weighted_sum(ad::conv2d(v[0], v[1], v[2]), w);
    });

    auto x1 = random_tensor<double>({2, 3, 6}, rng);
    auto c1w = random_tensor<double>({4, 3, 3}, rng, 0.4);
    auto c1b = random_tensor<double>({4}, rng);
    auto w1 = rand_weights({2, 4, 6}, 97);
    gradcheck({x1, c1w, c1b}, {true, true, true}, [&](auto& v) {
        return ad::weighted_sum(ad::conv1d(v[0], v[1], v[2]), w1);
    });

    auto lx = random_tensor<double>({3, 5}, rng);
    auto lw = random_tensor<double>({4, 5}, rng, 0.4);
    auto lb = random_tensor<double>({4}, rng);
    auto wl = rand_weights({3, 4}, 96);
    gradcheck({lx, lw, lb}, {true, true, true}, [&](auto& v) {
        return ad::weighted_sum(ad::linear(v[0], v[1], v[2]), wl);
    });
}

TEST_CASE("groupnorm gradients") {
    Rng rng(3);
    auto x = random_tensor<double>({2, 4, 3, 3}, rng);
    auto gamma = random_tensor<double>({4}, rng, 0.5);
    auto beta = random_tensor<double>({4}, rng, 0.5);
    auto w = rand_weights({2, 4, 3, 3}, 95);
    gradcheck({x, gamma, beta}, {true, true, true}, [&](auto& v) {
        return ad::weighted_sum(ad::groupnorm(v[0], v[1], v[2], 2, 1e-6), w);
    }, 1e-5, 1e-8);
}

TEST_CASE("shape and resampling gradients") {
    Rng rng(4);
    auto x = random_tensor<double>({2, 3, 4, 4}, rng);
    auto wp = rand_weights({2, 3, 2, 2}, 94);
    gradcheck({x}, {true}, [&](auto& v) { return ad::weighted_sum(ad::avgpool2d(v[0], 2, 2), wp); });
    auto wu = rand_weights({2, 3, 8, 4}, 93);
    gradcheck({x}, {true}, [&](auto& v) { return ad::weighted_sum(ad::upsample2d(v[0], 2, 1), wu); });
    auto wr = rand_weights({2, 48}, 92);
    gradcheck({x}, {true}, [&](auto& v) { return ad::weighted_sum(ad::reshape(v[0], {2, 48}), wr); });
    auto wm = rand_weights({4, 2, 4, 3}, 91);
    gradcheck({x}, {true}, [&](auto& v) { return ad::weighted_sum(ad::permute(v[0], {2, 0, 3, 1}), wm); });
}

TEST_CASE("bmm and softmax gradients") {
    Rng rng(5);
    auto a = random_tensor<double>({2, 3, 4}, rng);
    auto b = random_tensor<double>({2, 4, 5}, rng);
    auto bt = random_tensor<double>({2, 5, 4}, rng);
    auto w = rand_weights({2, 3, 5}, 90);
    gradcheck({a, b}, {true, true}, [&](auto& v) { return ad::weighted_sum(ad::bmm(v[0], v[1], false), w); });
    gradcheck({a, bt}, {true, true}, [&](auto& v) { return ad::weighted_sum(ad::bmm(v[0], v[1], true), w); });

    auto sx = random_tensor<double>({3, 6}, rng);
    auto ws = rand_weights({3, 6}, 89);
    gradcheck({sx}, {true}, [&](auto& v) { return ad::weighted_sum(ad::softmax_last(v[0]), ws); });
}

TEST_CASE("broadcast op gradients") {
    Rng rng(6);
    auto x = random_tensor<double>({2, 3, 4, 5}, rng);
    auto s = random_tensor<double>({2, 4}, rng);
    auto w = rand_weights({2, 3, 4, 5}, 88);
    gradcheck({x, s}, {true, true}, [&](auto& v) { return ad::weighted_sum(ad::mul_freq_scale(v[0], v[1]), w); });

    auto e = random_tensor<double>({2, 3}, rng);
    gradcheck({x, e}, {true, true}, [&](auto& v) { return ad::weighted_sum(ad::add_nc_bias(v[0], v[1]), w); });

    gradcheck({x}, {true}, [&](auto& v) { return ad::weighted_sum(ad::mul_per_sample(v[0], {0.3, -1.2}), w); });
}

TEST_CASE("weighted pseudo-huber gradient and value") {
    Rng rng(7);
    auto x = random_tensor<double>({3, 4, 2}, rng);
    auto y = random_tensor<double>({3, 4, 2}, rng);
    const std::vector<double> lam = {0.5, 2.0, 1.0};
    gradcheck({x, y}, {true, true}, [&](auto& v) { return ad::weighted_pseudo_huber(v[0], v[1], 0.1, lam); });

    // value agrees with direct formula
    auto vx = Var<double>::constant(x);
    auto vy = Var<double>::constant(y);
    const double got = ad::weighted_pseudo_huber(vx, vy, 0.1, lam).val().data[0];
    double want = 0;
    for (int n = 0; n < 3; ++n) {
        double ss = 0;
        for (int j = 0; j < 8; ++j) {
            const double d = x.data[static_cast<size_t>(n * 8 + j)] - y.data[static_cast<size_t>(n * 8 + j)];
            ss += d * d;
        }
        want += lam[static_cast<size_t>(n)] * (std::sqrt(ss + 0.01) - 0.1);
    }
    want /= 3;
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("grad accumulates when a var is used twice") {
    Rng rng(8);
    auto x = random_tensor<double>({2, 2}, rng);
    auto w = rand_weights({2, 2}, 87);
    gradcheck({x}, {true}, [&](auto& v) { return ad::weighted_sum(ad::add(ad::swish(v[0]), ad::mul(v[0], v[0])), w); });
}

TEST_CASE("detach and no-grad mode stop gradients") {
    Rng rng(9);
    auto xt = random_tensor<double>({2, 2}, rng);
    auto x = Var<double>::leaf(xt, true);

    auto teacher = [&]() {
        ad::NoGradGuard ng;
        return ad::swish(ad::scale(x, 2.0));
    }();
    CHECK_FALSE(teacher.requires_grad());

    auto loss = ad::weighted_sum(ad::mul(x, teacher), Tensor<double>::full({2, 2}, 1.0));
    ad::backward(loss);
    // gradient is exactly the teacher values: d/dx (x * const) = const
    for (size_t i = 0; i < 4; ++i) CHECK(x.grad().data[i] == teacher.val().data[i]);

    x.reset_grad();
    auto det = ad::detach(ad::scale(x, 3.0));
    CHECK_FALSE(det.requires_grad());
}

TEST_CASE("backward requires scalar loss") {
    auto x = Var<double>::leaf(Tensor<double>::full({2, 2}, 1.0), true);
    auto y = ad::scale(x, 2.0);
    CHECK_THROWS_AS(ad::backward(y), ShapeError);
}
