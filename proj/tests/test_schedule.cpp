#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "lac/schedule.hpp"

using namespace lac;

namespace {

ScheduleConfig defaults_k(int64_t K) {
    ScheduleConfig cfg;
    cfg.total_iterations = K;
    return cfg;
}

// independent scalar evaluation of the t -> sigma mapping
double sigma_oracle(double t, double smin, double smax, double rho) {
    return std::pow(std::pow(smin, 1.0 / rho) + t * (std::pow(smax, 1.0 / rho) - std::pow(smin, 1.0 / rho)), rho);
}

}  // namespace

TEST_CASE("step size endpoints and decay") {
    auto cfg = defaults_k(1000);
    CHECK(step_size(0, cfg) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(step_size(1000, cfg) == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(step_size(500, cfg) == doctest::Approx(0.01).epsilon(1e-12));
    double prev = step_size(0, cfg);
    for (int k = 1; k <= 1000; k += 7) {
        const double cur = step_size(k, cfg);
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK_THROWS_AS(step_size(-1, cfg), RangeError);
    CHECK_THROWS_AS(step_size(1001, cfg), RangeError);
}

TEST_CASE("t_to_sigma endpoints, monotonicity and oracle value") {
    auto cfg = defaults_k(100);
    CHECK(t_to_sigma(0.0, cfg) == cfg.sigma_min);
    CHECK(t_to_sigma(1.0, cfg) == cfg.sigma_max);
    // frozen from the independent scalar evaluation of the mapping at t = 0.5
    const double want = sigma_oracle(0.5, 0.002, 80.0, 7.0);
    CHECK(t_to_sigma(0.5, cfg) == doctest::Approx(want).epsilon(1e-12));
    CHECK(want == doctest::Approx(2.5155).epsilon(1e-3));
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double s = t_to_sigma(i / 100.0, cfg);
        CHECK(s > prev);
        prev = s;
    }
    CHECK_THROWS_AS(t_to_sigma(-0.01, cfg), RangeError);
    CHECK_THROWS_AS(t_to_sigma(1.01, cfg), RangeError);
}

TEST_CASE("sigma_to_t inverts t_to_sigma") {
    auto cfg = defaults_k(100);
    CHECK(sigma_to_t(cfg.sigma_min, cfg) == 0.0);
    CHECK(sigma_to_t(cfg.sigma_max, cfg) == 1.0);
    CHECK(sigma_to_t(t_to_sigma(0.3, cfg), cfg) == doctest::Approx(0.3).epsilon(1e-9));
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const double t = rng.uniform();
        const double back = sigma_to_t(t_to_sigma(t, cfg), cfg);
        CHECK(testutil::close(back, t, 1e-9));
        const double s = cfg.sigma_min + (cfg.sigma_max - cfg.sigma_min) * rng.uniform();
        CHECK(testutil::close(t_to_sigma(sigma_to_t(s, cfg), cfg), s, 1e-9));
    }
    CHECK_THROWS_AS(sigma_to_t(0.001, cfg), RangeError);
    CHECK_THROWS_AS(sigma_to_t(81.0, cfg), RangeError);
}

TEST_CASE("noise pair invariants hold for every draw") {
    auto cfg = defaults_k(5000);
    Rng rng(17);
    for (int i = 0; i < 20000; ++i) {
        const int64_t k = rng.below(5001);
        const NoisePair p = sample_noise_pair(k, rng, cfg);
        CHECK(p.sigma_lo >= cfg.sigma_min);
        CHECK(p.sigma_lo < p.sigma_hi);
        CHECK(p.sigma_hi <= cfg.sigma_max);
        CHECK(p.t_lo == std::max(p.t_hi - step_size(k, cfg), 0.0));
    }
}

TEST_CASE("clamp branch pins sigma_lo to sigma_min exactly") {
    auto cfg = defaults_k(100);
    cfg.p_mean = -20.0;  // every draw lands below sigma_min
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
        const NoisePair p = sample_noise_pair(0, rng, cfg);
        CHECK(p.t_lo == 0.0);
        CHECK(p.sigma_lo == cfg.sigma_min);
        CHECK(p.sigma_hi > p.sigma_lo);
    }
}

TEST_CASE("sigma_hi distribution matches a direct clamped lognormal sampler") {
    auto cfg = defaults_k(1000);
    const int n = 100000;
    std::vector<double> ours, direct;
    ours.reserve(n);
    direct.reserve(n);
    Rng rng_a(31);
    for (int i = 0; i < n; ++i) ours.push_back(sample_noise_pair(500, rng_a, cfg).sigma_hi);
    Rng rng_b(77);
    for (int i = 0; i < n; ++i)
        direct.push_back(std::clamp(std::exp(cfg.p_mean + cfg.p_std * rng_b.normal()), cfg.sigma_min, cfg.sigma_max));

    // boundary atoms compared as binomial fractions, interiors by two-sample KS
    const double lo_edge = cfg.sigma_min * (1 + 1e-5), hi_edge = cfg.sigma_max * (1 - 1e-5);
    auto split = [&](const std::vector<double>& v, std::vector<double>& interior) {
        int64_t lo = 0, hi = 0;
        for (double s : v) {
            if (s <= lo_edge)
                ++lo;
            else if (s >= hi_edge)
                ++hi;
            else
                interior.push_back(s);
        }
        return std::pair<int64_t, int64_t>(lo, hi);
    };
    std::vector<double> ia, ib;
    auto [lo_a, hi_a] = split(ours, ia);
    auto [lo_b, hi_b] = split(direct, ib);
    auto frac_close = [&](int64_t ca, int64_t cb) {
        const double pa = static_cast<double>(ca) / n, pb = static_cast<double>(cb) / n;
        const double p = 0.5 * (pa + pb);
        const double sd = std::sqrt(std::max(p * (1 - p) * 2.0 / n, 1e-12));
        return std::abs(pa - pb) <= 5 * sd;
    };
    CHECK(frac_close(lo_a, lo_b));
    CHECK(frac_close(hi_a, hi_b));

    std::sort(ia.begin(), ia.end());
    std::sort(ib.begin(), ib.end());
    double d = 0;
    size_t i = 0, j = 0;
    while (i < ia.size() && j < ib.size()) {
        if (ia[i] <= ib[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / ia.size() - static_cast<double>(j) / ib.size()));
    }
    const double na = static_cast<double>(ia.size()), nb = static_cast<double>(ib.size());
    const double crit = 1.949 * std::sqrt((na + nb) / (na * nb));  // alpha ~ 0.001
    CHECK(d < crit);
}

TEST_CASE("loss weight arithmetic and degenerate pair") {
    NoisePair p;
    p.sigma_lo = 1.0;
    p.sigma_hi = 1.5;
    CHECK(loss_weight(p) == doctest::Approx(2.0).epsilon(1e-15));
    NoisePair q = p;
    q.sigma_hi = 1.25;  // halve the gap
    CHECK(loss_weight(q) == doctest::Approx(2 * loss_weight(p)).epsilon(1e-12));
    NoisePair bad;
    bad.sigma_lo = bad.sigma_hi = 0.7;
    CHECK_THROWS_AS(loss_weight(bad), RangeError);
}

TEST_CASE("lambda times gap is one to the last ulp") {
    auto cfg = defaults_k(2000);
    Rng rng(37);
    for (int i = 0; i < 100000; ++i) {
        const NoisePair p = sample_noise_pair(rng.below(2001), rng, cfg);
        const double prod = loss_weight(p) * (p.sigma_hi - p.sigma_lo);
        CHECK(std::abs(prod - 1.0) <= 4 * 2.220446049250313e-16);
    }
}

TEST_CASE("consistency scalings: exact boundary, finite range, limits") {
    auto cfg = defaults_k(100);
    const Scalings at_min = consistency_scalings(cfg.sigma_min, cfg);
    CHECK(at_min.c_skip == 1.0);  // algebraically exact
    CHECK(at_min.c_out == 0.0);
    CHECK(at_min.c_in == doctest::Approx(1.0 / std::sqrt(cfg.sigma_min * cfg.sigma_min + 0.25)).epsilon(1e-15));

    // crossover region value vs an independent scalar re-implementation
    const double s = cfg.sigma_data + cfg.sigma_min;
    const Scalings mid = consistency_scalings(s, cfg);
    const double sd2 = cfg.sigma_data * cfg.sigma_data;
    CHECK(mid.c_skip == doctest::Approx(sd2 / ((s - cfg.sigma_min) * (s - cfg.sigma_min) + sd2)).epsilon(1e-15));
    CHECK(mid.c_out == doctest::Approx(cfg.sigma_data * (s - cfg.sigma_min) / std::sqrt(s * s + sd2)).epsilon(1e-15));
    CHECK(mid.c_in == doctest::Approx(1.0 / std::sqrt(s * s + sd2)).epsilon(1e-15));

    // limit behaviour toward sigma_max
    const Scalings top = consistency_scalings(cfg.sigma_max, cfg);
    CHECK(top.c_skip < 1e-4);
    CHECK(std::abs(top.c_out - cfg.sigma_data) < 1e-3);

    CHECK_THROWS_AS(consistency_scalings(cfg.sigma_min / 2, cfg), RangeError);
    CHECK_THROWS_AS(consistency_scalings(cfg.sigma_max * 2, cfg), RangeError);

    // differentiable (finite, smooth) across the domain
    double prev_skip = 1.0;
    for (int i = 1; i <= 1000; ++i) {
        const double sig = cfg.sigma_min + (cfg.sigma_max - cfg.sigma_min) * i / 1000.0;
        const Scalings sc = consistency_scalings(sig, cfg);
        CHECK(std::isfinite(sc.c_skip));
        CHECK(std::isfinite(sc.c_out));
        CHECK(std::isfinite(sc.c_in));
        CHECK(sc.c_skip <= prev_skip);
        prev_skip = sc.c_skip;
    }
}

TEST_CASE("pseudo-huber distance") {
    Tensor<double> x({1, 10}), y({1, 10});
    CHECK(pseudo_huber(x, y, 4.0) == 0.0);

    x.data[3] = 3.0;  // ||x - y|| = 3
    CHECK(pseudo_huber(x, y, 4.0) == doctest::Approx(1.0).epsilon(1e-12));

    // symmetry and monotonicity in the residual norm
    CHECK(pseudo_huber(x, y, 4.0) == pseudo_huber(y, x, 4.0));
    Tensor<double> x2 = x;
    x2.data[3] = 4.0;
    CHECK(pseudo_huber(x2, y, 4.0) > pseudo_huber(x, y, 4.0));

    // small-residual Taylor regime: d ~ r^2 / (2c) within 1% for r < c/10
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const double c = 0.5 + rng.uniform();
        const double r = c / 10.0 * rng.uniform();
        Tensor<double> a({1, 1}), b({1, 1});
        a.data[0] = r;
        const double d = pseudo_huber(a, b, c);
        CHECK(testutil::close(d, r * r / (2 * c), 0.01, 0.0));
    }

    Tensor<double> bad({2, 3});
    CHECK_THROWS_AS(pseudo_huber(x, bad, 1.0), ShapeError);
}

TEST_CASE("huber transition constant follows element count") {
    ScheduleConfig cfg;
    CHECK(huber_c(2 * 1024 * 64, cfg) == doctest::Approx(0.00054 * std::sqrt(2.0 * 1024 * 64)).epsilon(1e-15));
    CHECK_THROWS(huber_c(0, cfg));
}
