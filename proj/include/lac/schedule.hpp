#pragma once

#include <cstdint>

#include "lac/rng.hpp"

namespace lac {

// Noise-level machinery for consistency training: sigma bounds, the
// time-to-sigma mapping, lognormal sampling, exponential step-size decay,
// loss weighting and the boundary-exact scaling factors.
struct ScheduleConfig {
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double sigma_data = 0.5;
    double rho = 7.0;
    double p_mean = -1.1;
    double p_std = 2.0;
    double dt0 = 0.1;
    double e_k = 3.0;
    int64_t total_iterations = 800000;  // K
    double huber_c_scale = 0.00054;     // c = huber_c_scale * sqrt(elements per sample)

    void validate() const;
};

struct NoisePair {
    double sigma_lo = 0;  // sigma_i
    double sigma_hi = 0;  // sigma_{i+1}
    double t_lo = 0;
    double t_hi = 0;
};

struct Scalings {
    double c_skip;
    double c_out;
    double c_in;
};

// step size at iteration k: dt0^((k/K)(e_k - 1) + 1), strictly decreasing
double step_size(int64_t k, const ScheduleConfig& cfg);

// sigma(t) = (smin^(1/rho) + t (smax^(1/rho) - smin^(1/rho)))^rho on [0,1]
double t_to_sigma(double t, const ScheduleConfig& cfg);

// analytic inverse of t_to_sigma
double sigma_to_t(double sigma, const ScheduleConfig& cfg);

// draw t_hi from the clamped lognormal over sigma, step back by dt_k
NoisePair sample_noise_pair(int64_t k, Rng& rng, const ScheduleConfig& cfg);

// lambda = 1 / (sigma_hi - sigma_lo)
double loss_weight(const NoisePair& pair);

// c_skip(sigma_min) = 1 and c_out(sigma_min) = 0 hold algebraically
Scalings consistency_scalings(double sigma, const ScheduleConfig& cfg);

double huber_c(int64_t elements_per_sample, const ScheduleConfig& cfg);

// sqrt(||x - y||^2 + c^2) - c over flat arrays, cancellation-safe
template <class Real>
double pseudo_huber(const Tensor<Real>& x, const Tensor<Real>& y, double c);

}  // namespace lac
