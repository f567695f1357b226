#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lac/rng.hpp"
#include "lac/tensor.hpp"

namespace testutil {

template <class Real>
lac::Tensor<Real> random_tensor(lac::Shape shape, lac::Rng& rng, double scale = 1.0) {
    lac::Tensor<Real> t(std::move(shape));
    lac::fill_normal(t, rng, scale);
    return t;
}

template <class Real>
double max_abs_diff(const lac::Tensor<Real>& a, const lac::Tensor<Real>& b) {
    double m = 0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return m;
}

template <class Real>
bool bitwise_equal(const lac::Tensor<Real>& a, const lac::Tensor<Real>& b) {
    if (a.shape != b.shape) return false;
    for (size_t i = 0; i < a.data.size(); ++i)
        if (a.data[i] != b.data[i]) return false;
    return true;
}

inline double rel_err(double got, double want) {
    const double den = std::max(std::abs(got), std::abs(want));
    if (den == 0) return 0;
    return std::abs(got - want) / den;
}

// relative check with an absolute floor for near-zero pairs
inline bool close(double got, double want, double rtol, double atol = 1e-12) {
    return std::abs(got - want) <= rtol * std::max(std::abs(got), std::abs(want)) + atol;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("lac_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string str() const { return path.string(); }
};

// deterministic synthetic "musical" clip: a few harmonics with envelopes
inline std::vector<float> synth_clip(int64_t len, int sample_rate, uint64_t seed) {
    lac::Rng rng(seed);
    std::vector<float> out(static_cast<size_t>(len), 0.0f);
    const int voices = 4;
    for (int v = 0; v < voices; ++v) {
        const double f0 = 80.0 + 400.0 * rng.uniform();
        const double amp = 0.1 + 0.15 * rng.uniform();
        const double decay = 0.5 + 2.0 * rng.uniform();
        const double phase = 6.283185307179586 * rng.uniform();
        for (int64_t i = 0; i < len; ++i) {
            const double t = static_cast<double>(i) / sample_rate;
            const double env = std::exp(-decay * t);
            out[static_cast<size_t>(i)] += static_cast<float>(
                amp * env * (std::sin(6.283185307179586 * f0 * t + phase) + 0.4 * std::sin(6.283185307179586 * 2 * f0 * t)));
        }
    }
    for (int64_t i = 0; i < len; ++i) out[static_cast<size_t>(i)] += static_cast<float>(0.01 * rng.normal());
    return out;
}

}  // namespace testutil
