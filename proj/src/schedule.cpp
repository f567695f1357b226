#include "lac/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "lac/errors.hpp"

namespace lac {

namespace {
// Floor on t_hi so a lognormal draw projected onto sigma_min cannot
// produce a degenerate pair (sigma_lo == sigma_hi).
constexpr double kMinTHi = 1e-7;
}  // namespace

void ScheduleConfig::validate() const {
    require_config(sigma_min > 0 && sigma_min < sigma_max, "schedule: need 0 < sigma_min < sigma_max");
    require_config(sigma_data > 0, "schedule: sigma_data must be positive");
    require_config(rho > 0, "schedule: rho must be positive");
    require_config(p_std > 0, "schedule: p_std must be positive");
    require_config(dt0 > 0 && dt0 < 1, "schedule: dt0 must be in (0,1)");
    require_config(e_k >= 1, "schedule: e_k must be >= 1");
    require_config(total_iterations >= 1, "schedule: total_iterations must be >= 1");
    require_config(huber_c_scale > 0, "schedule: huber_c_scale must be positive");
}

double step_size(int64_t k, const ScheduleConfig& cfg) {
    require_range(k >= 0 && k <= cfg.total_iterations, "step_size: iteration outside [0, K]");
    const double frac = static_cast<double>(k) / static_cast<double>(cfg.total_iterations);
    return std::pow(cfg.dt0, frac * (cfg.e_k - 1.0) + 1.0);
}

double t_to_sigma(double t, const ScheduleConfig& cfg) {
    require_range(t >= 0.0 && t <= 1.0, "t_to_sigma: t outside [0,1]");
    if (t == 0.0) return cfg.sigma_min;
    if (t == 1.0) return cfg.sigma_max;
    const double lo = std::pow(cfg.sigma_min, 1.0 / cfg.rho);
    const double hi = std::pow(cfg.sigma_max, 1.0 / cfg.rho);
    return std::pow(lo + t * (hi - lo), cfg.rho);
}

double sigma_to_t(double sigma, const ScheduleConfig& cfg) {
    require_range(sigma >= cfg.sigma_min && sigma <= cfg.sigma_max, "sigma_to_t: sigma outside [sigma_min, sigma_max]");
    const double lo = std::pow(cfg.sigma_min, 1.0 / cfg.rho);
    const double hi = std::pow(cfg.sigma_max, 1.0 / cfg.rho);
    const double t = (std::pow(sigma, 1.0 / cfg.rho) - lo) / (hi - lo);
    return std::clamp(t, 0.0, 1.0);
}

NoisePair sample_noise_pair(int64_t k, Rng& rng, const ScheduleConfig& cfg) {
    const double dt = step_size(k, cfg);
    const double draw = std::exp(cfg.p_mean + cfg.p_std * rng.normal());
    const double sigma = std::clamp(draw, cfg.sigma_min, cfg.sigma_max);
    NoisePair pair;
    pair.t_hi = std::max(sigma_to_t(sigma, cfg), kMinTHi);
    pair.t_lo = std::max(pair.t_hi - dt, 0.0);
    pair.sigma_hi = t_to_sigma(pair.t_hi, cfg);
    pair.sigma_lo = t_to_sigma(pair.t_lo, cfg);
    return pair;
}

double loss_weight(const NoisePair& pair) {
    const double gap = pair.sigma_hi - pair.sigma_lo;
    if (!(gap > 0)) throw RangeError("loss_weight: degenerate pair (sigma_hi <= sigma_lo)");
    return 1.0 / gap;
}

Scalings consistency_scalings(double sigma, const ScheduleConfig& cfg) {
    require_range(sigma >= cfg.sigma_min && sigma <= cfg.sigma_max,
                  "consistency_scalings: sigma outside [sigma_min, sigma_max]");
    const double sd2 = cfg.sigma_data * cfg.sigma_data;
    const double shifted = sigma - cfg.sigma_min;  // exactly 0 at the boundary
    Scalings s;
    s.c_skip = sd2 / (shifted * shifted + sd2);
    s.c_out = cfg.sigma_data * shifted / std::sqrt(sigma * sigma + sd2);
    s.c_in = 1.0 / std::sqrt(sigma * sigma + sd2);
    return s;
}

double huber_c(int64_t elements_per_sample, const ScheduleConfig& cfg) {
    require(elements_per_sample > 0, "huber_c: element count must be positive");
    return cfg.huber_c_scale * std::sqrt(static_cast<double>(elements_per_sample));
}

template <class Real>
double pseudo_huber(const Tensor<Real>& x, const Tensor<Real>& y, double c) {
    check_same_shape(x, y, "pseudo_huber");
    require(c > 0, "pseudo_huber: c must be positive");
    double ss = 0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double d = static_cast<double>(x.data[i]) - static_cast<double>(y.data[i]);
        ss += d * d;
    }
    return ss / (std::sqrt(ss + c * c) + c);
}

template double pseudo_huber<float>(const Tensor<float>&, const Tensor<float>&, double);
template double pseudo_huber<double>(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace lac
