#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "lac/tensor.hpp"

// Dense compute kernels. Every kernel exists twice: `serial::` holds the
// straightforward reference loops used by the tests, `par::` holds the
// OpenMP versions used at runtime. Both variants accumulate each output
// element in the same order, so results are bitwise identical and runs
// stay reproducible at any thread count. Dispatchers at namespace scope
// pick the active variant via exec_mode().

namespace lac::kernels {

enum class Exec { serial, parallel };

inline Exec& exec_mode() {
    static Exec mode = Exec::parallel;
    return mode;
}

inline bool parallel_on() { return exec_mode() == Exec::parallel; }

// ---------------------------------------------------------------------------
// conv2d, stride 1, odd kernel, "same" zero padding
// x [N,Ci,F,T], w [Co,Ci,kf,kt], b [Co] (optional), y [N,Co,F,T]
// ---------------------------------------------------------------------------

namespace serial {

template <class Real>
void conv2d_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    const int64_t N = x.dim(0), Ci = x.dim(1), F = x.dim(2), T = x.dim(3);
    const int64_t Co = w.dim(0), kf = w.dim(2), kt = w.dim(3);
    const int64_t pf = kf / 2, pt = kt / 2;
    const Real* xp = x.ptr();
    const Real* wp = w.ptr();
    Real* yp = y.ptr();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < Co; ++o)
            for (int64_t f = 0; f < F; ++f)
                for (int64_t t = 0; t < T; ++t) {
                    Real acc = b ? b->data[static_cast<size_t>(o)] : Real(0);
                    for (int64_t i = 0; i < Ci; ++i)
                        for (int64_t p = 0; p < kf; ++p) {
                            const int64_t xf = f + p - pf;
                            if (xf < 0 || xf >= F) continue;
                            for (int64_t q = 0; q < kt; ++q) {
                                const int64_t xt = t + q - pt;
                                if (xt < 0 || xt >= T) continue;
                                acc += wp[((o * Ci + i) * kf + p) * kt + q] * xp[((n * Ci + i) * F + xf) * T + xt];
                            }
                        }
                    yp[((n * Co + o) * F + f) * T + t] = acc;
                }
}

template <class Real>
void conv2d_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& w, Tensor<Real>& gx) {
    const int64_t N = gx.dim(0), Ci = gx.dim(1), F = gx.dim(2), T = gx.dim(3);
    const int64_t Co = w.dim(0), kf = w.dim(2), kt = w.dim(3);
    const int64_t pf = kf / 2, pt = kt / 2;
    const Real* gp = gy.ptr();
    const Real* wp = w.ptr();
    Real* xp = gx.ptr();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t i = 0; i < Ci; ++i)
            for (int64_t f = 0; f < F; ++f)
                for (int64_t t = 0; t < T; ++t) {
                    Real acc = 0;
                    for (int64_t o = 0; o < Co; ++o)
                        for (int64_t p = 0; p < kf; ++p) {
                            const int64_t yf = f - p + pf;
                            if (yf < 0 || yf >= F) continue;
                            for (int64_t q = 0; q < kt; ++q) {
                                const int64_t yt = t - q + pt;
                                if (yt < 0 || yt >= T) continue;
                                acc += wp[((o * Ci + i) * kf + p) * kt + q] * gp[((n * Co + o) * F + yf) * T + yt];
                            }
                        }
                    xp[((n * Ci + i) * F + f) * T + t] = acc;
                }
}

template <class Real>
void conv2d_bwd_w(const Tensor<Real>& gy, const Tensor<Real>& x, Tensor<Real>& gw, Tensor<Real>* gb) {
    const int64_t N = x.dim(0), Ci = x.dim(1), F = x.dim(2), T = x.dim(3);
    const int64_t Co = gy.dim(1), kf = gw.dim(2), kt = gw.dim(3);
    const int64_t pf = kf / 2, pt = kt / 2;
    const Real* gp = gy.ptr();
    const Real* xp = x.ptr();
    Real* wp = gw.ptr();
    for (int64_t o = 0; o < Co; ++o)
        for (int64_t i = 0; i < Ci; ++i)
            for (int64_t p = 0; p < kf; ++p)
                for (int64_t q = 0; q < kt; ++q) {
                    Real acc = 0;
                    for (int64_t n = 0; n < N; ++n)
                        for (int64_t f = 0; f < F; ++f) {
                            const int64_t xf = f + p - pf;
                            if (xf < 0 || xf >= F) continue;
                            for (int64_t t = 0; t < T; ++t) {
                                const int64_t xt = t + q - pt;
                                if (xt < 0 || xt >= T) continue;
                                acc += gp[((n * Co + o) * F + f) * T + t] * xp[((n * Ci + i) * F + xf) * T + xt];
                            }
                        }
                    wp[((o * Ci + i) * kf + p) * kt + q] = acc;
                }
    if (gb) {
        for (int64_t o = 0; o < Co; ++o) {
            Real acc = 0;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t s = 0; s < F * T; ++s) acc += gp[(n * Co + o) * F * T + s];
            gb->data[static_cast<size_t>(o)] = acc;
        }
    }
}

}  // namespace serial

namespace par {

template <class Real>
void conv2d_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    const int64_t N = x.dim(0), Ci = x.dim(1), F = x.dim(2), T = x.dim(3);
    const int64_t Co = w.dim(0), kf = w.dim(2), kt = w.dim(3);
    const int64_t pf = kf / 2, pt = kt / 2;
    const Real* xp = x.ptr();
    const Real* wp = w.ptr();
    Real* yp = y.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t no = 0; no < N * Co; ++no) {
        const int64_t n = no / Co, o = no % Co;
        Real* ys = yp + no * F * T;
        const Real bias = b ? b->data[static_cast<size_t>(o)] : Real(0);
        for (int64_t s = 0; s < F * T; ++s) ys[s] = bias;
        for (int64_t i = 0; i < Ci; ++i) {
            const Real* xs = xp + (n * Ci + i) * F * T;
            for (int64_t p = 0; p < kf; ++p)
                for (int64_t q = 0; q < kt; ++q) {
                    const Real wv = wp[((o * Ci + i) * kf + p) * kt + q];
                    const int64_t f0 = std::max<int64_t>(0, pf - p), f1 = std::min(F, F + pf - p);
                    const int64_t t0 = std::max<int64_t>(0, pt - q), t1 = std::min(T, T + pt - q);
                    for (int64_t f = f0; f < f1; ++f) {
                        Real* yrow = ys + f * T;
                        const Real* xrow = xs + (f + p - pf) * T + (q - pt);
                        for (int64_t t = t0; t < t1; ++t) yrow[t] += wv * xrow[t];
                    }
                }
        }
    }
}

template <class Real>
void conv2d_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& w, Tensor<Real>& gx) {
    const int64_t N = gx.dim(0), Ci = gx.dim(1), F = gx.dim(2), T = gx.dim(3);
    const int64_t Co = w.dim(0), kf = w.dim(2), kt = w.dim(3);
    const int64_t pf = kf / 2, pt = kt / 2;
    const Real* gp = gy.ptr();
    const Real* wp = w.ptr();
    Real* xp = gx.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t ni = 0; ni < N * Ci; ++ni) {
        const int64_t n = ni / Ci, i = ni % Ci;
        Real* xs = xp + ni * F * T;
        for (int64_t s = 0; s < F * T; ++s) xs[s] = Real(0);
        for (int64_t o = 0; o < Co; ++o) {
            const Real* gs = gp + (n * Co + o) * F * T;
            for (int64_t p = 0; p < kf; ++p)
                for (int64_t q = 0; q < kt; ++q) {
                    const Real wv = wp[((o * Ci + i) * kf + p) * kt + q];
                    const int64_t f0 = std::max<int64_t>(0, p - pf), f1 = std::min(F, F + p - pf);
                    const int64_t t0 = std::max<int64_t>(0, q - pt), t1 = std::min(T, T + q - pt);
                    for (int64_t f = f0; f < f1; ++f) {
                        Real* xrow = xs + f * T;
                        const Real* grow = gs + (f - p + pf) * T + (pt - q);
                        for (int64_t t = t0; t < t1; ++t) xrow[t] += wv * grow[t];
                    }
                }
        }
    }
}

template <class Real>
void conv2d_bwd_w(const Tensor<Real>& gy, const Tensor<Real>& x, Tensor<Real>& gw, Tensor<Real>* gb) {
    const int64_t N = x.dim(0), Ci = x.dim(1), F = x.dim(2), T = x.dim(3);
    const int64_t Co = gy.dim(1), kf = gw.dim(2), kt = gw.dim(3);
    const int64_t pf = kf / 2, pt = kt / 2;
    const Real* gp = gy.ptr();
    const Real* xp = x.ptr();
    Real* wp = gw.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t oi = 0; oi < Co * Ci; ++oi) {
        const int64_t o = oi / Ci, i = oi % Ci;
        for (int64_t p = 0; p < kf; ++p)
            for (int64_t q = 0; q < kt; ++q) {
                Real acc = 0;
                for (int64_t n = 0; n < N; ++n) {
                    const Real* gs = gp + (n * Co + o) * F * T;
                    const Real* xs = xp + (n * Ci + i) * F * T;
                    for (int64_t f = 0; f < F; ++f) {
                        const int64_t xf = f + p - pf;
                        if (xf < 0 || xf >= F) continue;
                        const Real* grow = gs + f * T;
                        const Real* xrow = xs + xf * T + (q - pt);
                        const int64_t t0 = std::max<int64_t>(0, pt - q), t1 = std::min(T, T + pt - q);
                        for (int64_t t = t0; t < t1; ++t) acc += grow[t] * xrow[t];
                    }
                }
                wp[((o * Ci + i) * kf + p) * kt + q] = acc;
            }
    }
    if (gb) {
        Real* bp = gb->ptr();
#pragma omp parallel for schedule(static)
        for (int64_t o = 0; o < Co; ++o) {
            Real acc = 0;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t s = 0; s < F * T; ++s) acc += gp[(n * Co + o) * F * T + s];
            bp[o] = acc;
        }
    }
}

}  // namespace par

template <class Real>
void conv2d_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    parallel_on() ? par::conv2d_fwd(x, w, b, y) : serial::conv2d_fwd(x, w, b, y);
}
template <class Real>
void conv2d_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& w, Tensor<Real>& gx) {
    parallel_on() ? par::conv2d_bwd_x(gy, w, gx) : serial::conv2d_bwd_x(gy, w, gx);
}
template <class Real>
void conv2d_bwd_w(const Tensor<Real>& gy, const Tensor<Real>& x, Tensor<Real>& gw, Tensor<Real>* gb) {
    parallel_on() ? par::conv2d_bwd_w(gy, x, gw, gb) : serial::conv2d_bwd_w(gy, x, gw, gb);
}

// ---------------------------------------------------------------------------
// conv1d, stride 1, odd kernel, "same" zero padding
// x [N,Ci,L], w [Co,Ci,k], b [Co] (optional), y [N,Co,L]
// ---------------------------------------------------------------------------

namespace serial {

template <class Real>
void conv1d_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    const int64_t N = x.dim(0), Ci = x.dim(1), L = x.dim(2);
    const int64_t Co = w.dim(0), k = w.dim(2), pk = k / 2;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < Co; ++o)
            for (int64_t l = 0; l < L; ++l) {
                Real acc = b ? b->data[static_cast<size_t>(o)] : Real(0);
                for (int64_t i = 0; i < Ci; ++i)
                    for (int64_t q = 0; q < k; ++q) {
                        const int64_t xl = l + q - pk;
                        if (xl < 0 || xl >= L) continue;
                        acc += w.data[static_cast<size_t>((o * Ci + i) * k + q)] * x.data[static_cast<size_t>((n * Ci + i) * L + xl)];
                    }
                y.data[static_cast<size_t>((n * Co + o) * L + l)] = acc;
            }
}

template <class Real>
void conv1d_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& w, Tensor<Real>& gx) {
    const int64_t N = gx.dim(0), Ci = gx.dim(1), L = gx.dim(2);
    const int64_t Co = w.dim(0), k = w.dim(2), pk = k / 2;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t i = 0; i < Ci; ++i)
            for (int64_t l = 0; l < L; ++l) {
                Real acc = 0;
                for (int64_t o = 0; o < Co; ++o)
                    for (int64_t q = 0; q < k; ++q) {
                        const int64_t yl = l - q + pk;
                        if (yl < 0 || yl >= L) continue;
                        acc += w.data[static_cast<size_t>((o * Ci + i) * k + q)] * gy.data[static_cast<size_t>((n * Co + o) * L + yl)];
                    }
                gx.data[static_cast<size_t>((n * Ci + i) * L + l)] = acc;
            }
}

template <class Real>
void conv1d_bwd_w(const Tensor<Real>& gy, const Tensor<Real>& x, Tensor<Real>& gw, Tensor<Real>* gb) {
    const int64_t N = x.dim(0), Ci = x.dim(1), L = x.dim(2);
    const int64_t Co = gy.dim(1), k = gw.dim(2), pk = k / 2;
    for (int64_t o = 0; o < Co; ++o) {
        for (int64_t i = 0; i < Ci; ++i)
            for (int64_t q = 0; q < k; ++q) {
                Real acc = 0;
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t l = 0; l < L; ++l) {
                        const int64_t xl = l + q - pk;
                        if (xl < 0 || xl >= L) continue;
                        acc += gy.data[static_cast<size_t>((n * Co + o) * L + l)] * x.data[static_cast<size_t>((n * Ci + i) * L + xl)];
                    }
                gw.data[static_cast<size_t>((o * Ci + i) * k + q)] = acc;
            }
        if (gb) {
            Real acc = 0;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t l = 0; l < L; ++l) acc += gy.data[static_cast<size_t>((n * Co + o) * L + l)];
            gb->data[static_cast<size_t>(o)] = acc;
        }
    }
}

}  // namespace serial

namespace par {

template <class Real>
void conv1d_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    const int64_t N = x.dim(0), Ci = x.dim(1), L = x.dim(2);
    const int64_t Co = w.dim(0), k = w.dim(2), pk = k / 2;
    const Real* xp = x.ptr();
    const Real* wp = w.ptr();
    Real* yp = y.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t no = 0; no < N * Co; ++no) {
        const int64_t n = no / Co, o = no % Co;
        Real* ys = yp + no * L;
        const Real bias = b ? b->data[static_cast<size_t>(o)] : Real(0);
        for (int64_t l = 0; l < L; ++l) ys[l] = bias;
        for (int64_t i = 0; i < Ci; ++i) {
            const Real* xs = xp + (n * Ci + i) * L;
            for (int64_t q = 0; q < k; ++q) {
                const Real wv = wp[(o * Ci + i) * k + q];
                const int64_t l0 = std::max<int64_t>(0, pk - q), l1 = std::min(L, L + pk - q);
                const Real* xrow = xs + (q - pk);
                for (int64_t l = l0; l < l1; ++l) ys[l] += wv * xrow[l];
            }
        }
    }
}

template <class Real>
void conv1d_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& w, Tensor<Real>& gx) {
    const int64_t N = gx.dim(0), Ci = gx.dim(1), L = gx.dim(2);
    const int64_t Co = w.dim(0), k = w.dim(2), pk = k / 2;
    const Real* gp = gy.ptr();
    const Real* wp = w.ptr();
    Real* xp = gx.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t ni = 0; ni < N * Ci; ++ni) {
        const int64_t n = ni / Ci, i = ni % Ci;
        Real* xs = xp + ni * L;
        for (int64_t l = 0; l < L; ++l) xs[l] = Real(0);
        for (int64_t o = 0; o < Co; ++o) {
            const Real* gs = gp + (n * Co + o) * L;
            for (int64_t q = 0; q < k; ++q) {
                const Real wv = wp[(o * Ci + i) * k + q];
                const int64_t l0 = std::max<int64_t>(0, q - pk), l1 = std::min(L, L + q - pk);
                const Real* grow = gs + (pk - q);
                for (int64_t l = l0; l < l1; ++l) xs[l] += wv * grow[l];
            }
        }
    }
}

template <class Real>
void conv1d_bwd_w(const Tensor<Real>& gy, const Tensor<Real>& x, Tensor<Real>& gw, Tensor<Real>* gb) {
    const int64_t N = x.dim(0), Ci = x.dim(1), L = x.dim(2);
    const int64_t Co = gy.dim(1), k = gw.dim(2), pk = k / 2;
    const Real* gp = gy.ptr();
    const Real* xp = x.ptr();
#pragma omp parallel for schedule(static)
    for (int64_t oi = 0; oi < Co * Ci; ++oi) {
        const int64_t o = oi / Ci, i = oi % Ci;
        for (int64_t q = 0; q < k; ++q) {
            Real acc = 0;
            for (int64_t n = 0; n < N; ++n) {
                const Real* gs = gp + (n * Co + o) * L;
                const Real* xs = xp + (n * Ci + i) * L + (q - pk);
                const int64_t l0 = std::max<int64_t>(0, pk - q), l1 = std::min(L, L + pk - q);
                for (int64_t l = l0; l < l1; ++l) acc += gs[l] * xs[l];
            }
            gw.data[static_cast<size_t>((o * Ci + i) * k + q)] = acc;
        }
    }
    if (gb) {
        Real* bp = gb->ptr();
#pragma omp parallel for schedule(static)
        for (int64_t o = 0; o < Co; ++o) {
            Real acc = 0;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t l = 0; l < L; ++l) acc += gp[(n * Co + o) * L + l];
            bp[o] = acc;
        }
    }
}

}  // namespace par

template <class Real>
void conv1d_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    parallel_on() ? par::conv1d_fwd(x, w, b, y) : serial::conv1d_fwd(x, w, b, y);
}
template <class Real>
void conv1d_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& w, Tensor<Real>& gx) {
    parallel_on() ? par::conv1d_bwd_x(gy, w, gx) : serial::conv1d_bwd_x(gy, w, gx);
}
template <class Real>
void conv1d_bwd_w(const Tensor<Real>& gy, const Tensor<Real>& x, Tensor<Real>& gw, Tensor<Real>* gb) {
    parallel_on() ? par::conv1d_bwd_w(gy, x, gw, gb) : serial::conv1d_bwd_w(gy, x, gw, gb);
}

// ---------------------------------------------------------------------------
// group normalization over [N,C,S] (S = flattened spatial extent)
// ---------------------------------------------------------------------------

namespace detail {

template <class Real>
void groupnorm_group(const Real* xs, Real* ys, const Real* gamma, const Real* beta, int64_t c0, int64_t Cg, int64_t S,
                     double eps, Real* mean_out, Real* rstd_out) {
    const int64_t M = Cg * S;
    double sum = 0;
    for (int64_t j = 0; j < M; ++j) sum += static_cast<double>(xs[j]);
    const double mu = sum / static_cast<double>(M);
    double var = 0;
    for (int64_t j = 0; j < M; ++j) {
        const double d = static_cast<double>(xs[j]) - mu;
        var += d * d;
    }
    var /= static_cast<double>(M);
    const double rstd = 1.0 / std::sqrt(var + eps);
    for (int64_t c = 0; c < Cg; ++c) {
        const Real g = gamma[c0 + c], bb = beta[c0 + c];
        for (int64_t s = 0; s < S; ++s) {
            const int64_t j = c * S + s;
            ys[j] = static_cast<Real>((static_cast<double>(xs[j]) - mu) * rstd) * g + bb;
        }
    }
    *mean_out = static_cast<Real>(mu);
    *rstd_out = static_cast<Real>(rstd);
}

template <class Real>
void groupnorm_group_bwd(const Real* gys, const Real* xs, Real* gxs, const Real* gamma, int64_t c0, int64_t Cg,
                         int64_t S, Real mean, Real rstd) {
    const int64_t M = Cg * S;
    const double mu = static_cast<double>(mean), rs = static_cast<double>(rstd);
    double s1 = 0, s2 = 0;
    for (int64_t c = 0; c < Cg; ++c) {
        const double g = static_cast<double>(gamma[c0 + c]);
        for (int64_t s = 0; s < S; ++s) {
            const int64_t j = c * S + s;
            const double d = static_cast<double>(gys[j]) * g;
            const double xh = (static_cast<double>(xs[j]) - mu) * rs;
            s1 += d;
            s2 += d * xh;
        }
    }
    const double inv_m = 1.0 / static_cast<double>(M);
    for (int64_t c = 0; c < Cg; ++c) {
        const double g = static_cast<double>(gamma[c0 + c]);
        for (int64_t s = 0; s < S; ++s) {
            const int64_t j = c * S + s;
            const double d = static_cast<double>(gys[j]) * g;
            const double xh = (static_cast<double>(xs[j]) - mu) * rs;
            gxs[j] = static_cast<Real>(rs * (d - s1 * inv_m - xh * s2 * inv_m));
        }
    }
}

}  // namespace detail

namespace serial {

template <class Real>
void groupnorm_fwd(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta, int64_t groups,
                   double eps, Tensor<Real>& y, Tensor<Real>& mean, Tensor<Real>& rstd) {
    const int64_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C), Cg = C / groups;
    for (int64_t ng = 0; ng < N * groups; ++ng) {
        const int64_t n = ng / groups, g = ng % groups, c0 = g * Cg;
        detail::groupnorm_group(x.ptr() + (n * C + c0) * S, y.ptr() + (n * C + c0) * S, gamma.ptr(), beta.ptr(), c0, Cg,
                                S, eps, mean.ptr() + ng, rstd.ptr() + ng);
    }
}

template <class Real>
void groupnorm_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& gamma,
                     const Tensor<Real>& mean, const Tensor<Real>& rstd, int64_t groups, Tensor<Real>& gx) {
    const int64_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C), Cg = C / groups;
    for (int64_t ng = 0; ng < N * groups; ++ng) {
        const int64_t n = ng / groups, g = ng % groups, c0 = g * Cg;
        detail::groupnorm_group_bwd(gy.ptr() + (n * C + c0) * S, x.ptr() + (n * C + c0) * S,
                                    gx.ptr() + (n * C + c0) * S, gamma.ptr(), c0, Cg, S, mean.data[ng], rstd.data[ng]);
    }
}

template <class Real>
void groupnorm_bwd_affine(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& mean,
                          const Tensor<Real>& rstd, int64_t groups, Tensor<Real>& ggamma, Tensor<Real>& gbeta) {
    const int64_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C), Cg = C / groups;
    for (int64_t c = 0; c < C; ++c) {
        const int64_t g = c / Cg;
        double ag = 0, ab = 0;
        for (int64_t n = 0; n < N; ++n) {
            const double mu = static_cast<double>(mean.data[n * groups + g]);
            const double rs = static_cast<double>(rstd.data[n * groups + g]);
            const Real* xs = x.ptr() + (n * C + c) * S;
            const Real* gs = gy.ptr() + (n * C + c) * S;
            for (int64_t s = 0; s < S; ++s) {
                ag += static_cast<double>(gs[s]) * (static_cast<double>(xs[s]) - mu) * rs;
                ab += static_cast<double>(gs[s]);
            }
        }
        ggamma.data[static_cast<size_t>(c)] = static_cast<Real>(ag);
        gbeta.data[static_cast<size_t>(c)] = static_cast<Real>(ab);
    }
}

}  // namespace serial

namespace par {

template <class Real>
void groupnorm_fwd(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta, int64_t groups,
                   double eps, Tensor<Real>& y, Tensor<Real>& mean, Tensor<Real>& rstd) {
    const int64_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C), Cg = C / groups;
#pragma omp parallel for schedule(static)
    for (int64_t ng = 0; ng < N * groups; ++ng) {
        const int64_t n = ng / groups, g = ng % groups, c0 = g * Cg;
        detail::groupnorm_group(x.ptr() + (n * C + c0) * S, y.ptr() + (n * C + c0) * S, gamma.ptr(), beta.ptr(), c0, Cg,
                                S, eps, mean.ptr() + ng, rstd.ptr() + ng);
    }
}

template <class Real>
void groupnorm_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& gamma,
                     const Tensor<Real>& mean, const Tensor<Real>& rstd, int64_t groups, Tensor<Real>& gx) {
    const int64_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C), Cg = C / groups;
#pragma omp parallel for schedule(static)
    for (int64_t ng = 0; ng < N * groups; ++ng) {
        const int64_t n = ng / groups, g = ng % groups, c0 = g * Cg;
        detail::groupnorm_group_bwd(gy.ptr() + (n * C + c0) * S, x.ptr() + (n * C + c0) * S,
                                    gx.ptr() + (n * C + c0) * S, gamma.ptr(), c0, Cg, S, mean.data[ng], rstd.data[ng]);
    }
}

template <class Real>
void groupnorm_bwd_affine(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& mean,
                          const Tensor<Real>& rstd, int64_t groups, Tensor<Real>& ggamma, Tensor<Real>& gbeta) {
    const int64_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C), Cg = C / groups;
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < C; ++c) {
        const int64_t g = c / Cg;
        double ag = 0, ab = 0;
        for (int64_t n = 0; n < N; ++n) {
            const double mu = static_cast<double>(mean.data[n * groups + g]);
            const double rs = static_cast<double>(rstd.data[n * groups + g]);
            const Real* xs = x.ptr() + (n * C + c) * S;
            const Real* gs = gy.ptr() + (n * C + c) * S;
            for (int64_t s = 0; s < S; ++s) {
                ag += static_cast<double>(gs[s]) * (static_cast<double>(xs[s]) - mu) * rs;
                ab += static_cast<double>(gs[s]);
            }
        }
        ggamma.data[static_cast<size_t>(c)] = static_cast<Real>(ag);
        gbeta.data[static_cast<size_t>(c)] = static_cast<Real>(ab);
    }
}

}  // namespace par

template <class Real>
void groupnorm_fwd(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta, int64_t groups,
                   double eps, Tensor<Real>& y, Tensor<Real>& mean, Tensor<Real>& rstd) {
    parallel_on() ? par::groupnorm_fwd(x, gamma, beta, groups, eps, y, mean, rstd)
                  : serial::groupnorm_fwd(x, gamma, beta, groups, eps, y, mean, rstd);
}
template <class Real>
void groupnorm_bwd_x(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& gamma,
                     const Tensor<Real>& mean, const Tensor<Real>& rstd, int64_t groups, Tensor<Real>& gx) {
    parallel_on() ? par::groupnorm_bwd_x(gy, x, gamma, mean, rstd, groups, gx)
                  : serial::groupnorm_bwd_x(gy, x, gamma, mean, rstd, groups, gx);
}
template <class Real>
void groupnorm_bwd_affine(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& mean,
                          const Tensor<Real>& rstd, int64_t groups, Tensor<Real>& ggamma, Tensor<Real>& gbeta) {
    parallel_on() ? par::groupnorm_bwd_affine(gy, x, mean, rstd, groups, ggamma, gbeta)
                  : serial::groupnorm_bwd_affine(gy, x, mean, rstd, groups, ggamma, gbeta);
}

// ---------------------------------------------------------------------------
// batched matmul: y[b] = a[b] * B[b]   (trans_b: B given as [B,N,K])
// a [B,M,K], b [B,K,N] or [B,N,K], y [B,M,N]
// ---------------------------------------------------------------------------

namespace serial {

template <class Real>
void bmm(const Tensor<Real>& a, const Tensor<Real>& b, bool trans_b, Tensor<Real>& y) {
    const int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
    const int64_t Nn = trans_b ? b.dim(1) : b.dim(2);
    for (int64_t bb = 0; bb < B; ++bb)
        for (int64_t m = 0; m < M; ++m)
            for (int64_t n = 0; n < Nn; ++n) {
                Real acc = 0;
                const Real* ar = a.ptr() + (bb * M + m) * K;
                if (trans_b) {
                    const Real* br = b.ptr() + (bb * Nn + n) * K;
                    for (int64_t k = 0; k < K; ++k) acc += ar[k] * br[k];
                } else {
                    const Real* bs = b.ptr() + bb * K * Nn;
                    for (int64_t k = 0; k < K; ++k) acc += ar[k] * bs[k * Nn + n];
                }
                y.data[static_cast<size_t>((bb * M + m) * Nn + n)] = acc;
            }
}

}  // namespace serial

namespace par {

template <class Real>
void bmm(const Tensor<Real>& a, const Tensor<Real>& b, bool trans_b, Tensor<Real>& y) {
    const int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
    const int64_t Nn = trans_b ? b.dim(1) : b.dim(2);
#pragma omp parallel for schedule(static)
    for (int64_t bm = 0; bm < B * M; ++bm) {
        const int64_t bb = bm / M;
        const Real* ar = a.ptr() + bm * K;
        Real* yr = y.ptr() + bm * Nn;
        for (int64_t n = 0; n < Nn; ++n) {
            Real acc = 0;
            if (trans_b) {
                const Real* br = b.ptr() + (bb * Nn + n) * K;
                for (int64_t k = 0; k < K; ++k) acc += ar[k] * br[k];
            } else {
                const Real* bs = b.ptr() + bb * K * Nn;
                for (int64_t k = 0; k < K; ++k) acc += ar[k] * bs[k * Nn + n];
            }
            yr[n] = acc;
        }
    }
}

}  // namespace par

template <class Real>
void bmm(const Tensor<Real>& a, const Tensor<Real>& b, bool trans_b, Tensor<Real>& y) {
    parallel_on() ? par::bmm(a, b, trans_b, y) : serial::bmm(a, b, trans_b, y);
}

// y[b,p,q] = sum_m a[b,m,p] * c[b,m,q]   (a^T c, used by matmul backward)
namespace serial {

template <class Real>
void bmm_tn(const Tensor<Real>& a, const Tensor<Real>& c, Tensor<Real>& y) {
    const int64_t B = a.dim(0), M = a.dim(1), P = a.dim(2), Q = c.dim(2);
    for (int64_t bb = 0; bb < B; ++bb)
        for (int64_t p = 0; p < P; ++p)
            for (int64_t q = 0; q < Q; ++q) {
                Real acc = 0;
                for (int64_t m = 0; m < M; ++m)
                    acc += a.data[static_cast<size_t>((bb * M + m) * P + p)] * c.data[static_cast<size_t>((bb * M + m) * Q + q)];
                y.data[static_cast<size_t>((bb * P + p) * Q + q)] = acc;
            }
}

}  // namespace serial

namespace par {

template <class Real>
void bmm_tn(const Tensor<Real>& a, const Tensor<Real>& c, Tensor<Real>& y) {
    const int64_t B = a.dim(0), M = a.dim(1), P = a.dim(2), Q = c.dim(2);
#pragma omp parallel for schedule(static)
    for (int64_t bp = 0; bp < B * P; ++bp) {
        const int64_t bb = bp / P, p = bp % P;
        Real* yr = y.ptr() + bp * Q;
        for (int64_t q = 0; q < Q; ++q) {
            Real acc = 0;
            for (int64_t m = 0; m < M; ++m)
                acc += a.data[static_cast<size_t>((bb * M + m) * P + p)] * c.data[static_cast<size_t>((bb * M + m) * Q + q)];
            yr[q] = acc;
        }
    }
}

}  // namespace par

template <class Real>
void bmm_tn(const Tensor<Real>& a, const Tensor<Real>& c, Tensor<Real>& y) {
    parallel_on() ? par::bmm_tn(a, c, y) : serial::bmm_tn(a, c, y);
}

// ---------------------------------------------------------------------------
// softmax over the last axis; x treated as [R, D]
// ---------------------------------------------------------------------------

namespace detail {

template <class Real>
void softmax_row(const Real* xr, Real* yr, int64_t D) {
    Real mx = xr[0];
    for (int64_t d = 1; d < D; ++d) mx = std::max(mx, xr[d]);
    double sum = 0;
    for (int64_t d = 0; d < D; ++d) {
        const double e = std::exp(static_cast<double>(xr[d] - mx));
        yr[d] = static_cast<Real>(e);
        sum += e;
    }
    const double inv = 1.0 / sum;
    for (int64_t d = 0; d < D; ++d) yr[d] = static_cast<Real>(static_cast<double>(yr[d]) * inv);
}

template <class Real>
void softmax_row_bwd(const Real* gyr, const Real* yr, Real* gxr, int64_t D) {
    double dot = 0;
    for (int64_t d = 0; d < D; ++d) dot += static_cast<double>(gyr[d]) * static_cast<double>(yr[d]);
    for (int64_t d = 0; d < D; ++d)
        gxr[d] = static_cast<Real>(static_cast<double>(yr[d]) * (static_cast<double>(gyr[d]) - dot));
}

}  // namespace detail

namespace serial {

template <class Real>
void softmax_last(const Tensor<Real>& x, Tensor<Real>& y) {
    const int64_t D = x.shape.back(), R = x.numel() / D;
    for (int64_t r = 0; r < R; ++r) detail::softmax_row(x.ptr() + r * D, y.ptr() + r * D, D);
}

template <class Real>
void softmax_last_bwd(const Tensor<Real>& gy, const Tensor<Real>& y, Tensor<Real>& gx) {
    const int64_t D = y.shape.back(), R = y.numel() / D;
    for (int64_t r = 0; r < R; ++r) detail::softmax_row_bwd(gy.ptr() + r * D, y.ptr() + r * D, gx.ptr() + r * D, D);
}

}  // namespace serial

namespace par {

template <class Real>
void softmax_last(const Tensor<Real>& x, Tensor<Real>& y) {
    const int64_t D = x.shape.back(), R = x.numel() / D;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < R; ++r) detail::softmax_row(x.ptr() + r * D, y.ptr() + r * D, D);
}

template <class Real>
void softmax_last_bwd(const Tensor<Real>& gy, const Tensor<Real>& y, Tensor<Real>& gx) {
    const int64_t D = y.shape.back(), R = y.numel() / D;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < R; ++r) detail::softmax_row_bwd(gy.ptr() + r * D, y.ptr() + r * D, gx.ptr() + r * D, D);
}

}  // namespace par

template <class Real>
void softmax_last(const Tensor<Real>& x, Tensor<Real>& y) {
    parallel_on() ? par::softmax_last(x, y) : serial::softmax_last(x, y);
}
template <class Real>
void softmax_last_bwd(const Tensor<Real>& gy, const Tensor<Real>& y, Tensor<Real>& gx) {
    parallel_on() ? par::softmax_last_bwd(gy, y, gx) : serial::softmax_last_bwd(gy, y, gx);
}

// ---------------------------------------------------------------------------
// resampling along (F, T): average pooling down, nearest-neighbor up
// ---------------------------------------------------------------------------

template <class Real>
void avgpool2d_fwd(const Tensor<Real>& x, int64_t pf, int64_t pt, Tensor<Real>& y) {
    const int64_t NC = x.dim(0) * x.dim(1), F = x.dim(2), T = x.dim(3);
    const int64_t Fo = F / pf, To = T / pt;
    const Real inv = Real(1) / static_cast<Real>(pf * pt);
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t c = 0; c < NC; ++c) {
        const Real* xs = x.ptr() + c * F * T;
        Real* ys = y.ptr() + c * Fo * To;
        for (int64_t f = 0; f < Fo; ++f)
            for (int64_t t = 0; t < To; ++t) {
                Real acc = 0;
                for (int64_t a = 0; a < pf; ++a)
                    for (int64_t b = 0; b < pt; ++b) acc += xs[(f * pf + a) * T + t * pt + b];
                ys[f * To + t] = acc * inv;
            }
    }
}

template <class Real>
void avgpool2d_bwd(const Tensor<Real>& gy, int64_t pf, int64_t pt, Tensor<Real>& gx) {
    const int64_t NC = gx.dim(0) * gx.dim(1), F = gx.dim(2), T = gx.dim(3);
    const int64_t Fo = F / pf, To = T / pt;
    const Real inv = Real(1) / static_cast<Real>(pf * pt);
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t c = 0; c < NC; ++c) {
        const Real* gs = gy.ptr() + c * Fo * To;
        Real* xs = gx.ptr() + c * F * T;
        for (int64_t f = 0; f < F; ++f)
            for (int64_t t = 0; t < T; ++t) xs[f * T + t] = gs[(f / pf) * To + t / pt] * inv;
    }
}

template <class Real>
void upsample2d_fwd(const Tensor<Real>& x, int64_t rf, int64_t rt, Tensor<Real>& y) {
    const int64_t NC = x.dim(0) * x.dim(1), F = x.dim(2), T = x.dim(3);
    const int64_t Fo = F * rf, To = T * rt;
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t c = 0; c < NC; ++c) {
        const Real* xs = x.ptr() + c * F * T;
        Real* ys = y.ptr() + c * Fo * To;
        for (int64_t f = 0; f < Fo; ++f)
            for (int64_t t = 0; t < To; ++t) ys[f * To + t] = xs[(f / rf) * T + t / rt];
    }
}

template <class Real>
void upsample2d_bwd(const Tensor<Real>& gy, int64_t rf, int64_t rt, Tensor<Real>& gx) {
    const int64_t NC = gx.dim(0) * gx.dim(1), F = gx.dim(2), T = gx.dim(3);
    const int64_t To = T * rt;
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t c = 0; c < NC; ++c) {
        const Real* gs = gy.ptr() + c * F * rf * To;
        Real* xs = gx.ptr() + c * F * T;
        for (int64_t f = 0; f < F; ++f)
            for (int64_t t = 0; t < T; ++t) {
                Real acc = 0;
                for (int64_t a = 0; a < rf; ++a)
                    for (int64_t b = 0; b < rt; ++b) acc += gs[(f * rf + a) * To + t * rt + b];
                xs[f * T + t] = acc;
            }
    }
}

// ---------------------------------------------------------------------------
// linear: y[n] = W x[n] + b    x [N,Di], W [Do,Di], b [Do], y [N,Do]
// ---------------------------------------------------------------------------

namespace serial {

template <class Real>
void linear_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    const int64_t N = x.dim(0), Di = x.dim(1), Do = w.dim(0);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < Do; ++o) {
            Real acc = b ? b->data[static_cast<size_t>(o)] : Real(0);
            const Real* xr = x.ptr() + n * Di;
            const Real* wr = w.ptr() + o * Di;
            for (int64_t i = 0; i < Di; ++i) acc += wr[i] * xr[i];
            y.data[static_cast<size_t>(n * Do + o)] = acc;
        }
}

template <class Real>
void linear_bwd(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& w, Tensor<Real>* gx,
                Tensor<Real>* gw, Tensor<Real>* gb) {
    const int64_t N = x.dim(0), Di = x.dim(1), Do = w.dim(0);
    if (gx) {
        for (int64_t n = 0; n < N; ++n)
            for (int64_t i = 0; i < Di; ++i) {
                Real acc = 0;
                for (int64_t o = 0; o < Do; ++o) acc += gy.data[static_cast<size_t>(n * Do + o)] * w.data[static_cast<size_t>(o * Di + i)];
                gx->data[static_cast<size_t>(n * Di + i)] = acc;
            }
    }
    if (gw) {
        for (int64_t o = 0; o < Do; ++o)
            for (int64_t i = 0; i < Di; ++i) {
                Real acc = 0;
                for (int64_t n = 0; n < N; ++n) acc += gy.data[static_cast<size_t>(n * Do + o)] * x.data[static_cast<size_t>(n * Di + i)];
                gw->data[static_cast<size_t>(o * Di + i)] = acc;
            }
    }
    if (gb) {
        for (int64_t o = 0; o < Do; ++o) {
            Real acc = 0;
            for (int64_t n = 0; n < N; ++n) acc += gy.data[static_cast<size_t>(n * Do + o)];
            gb->data[static_cast<size_t>(o)] = acc;
        }
    }
}

}  // namespace serial

namespace par {

template <class Real>
void linear_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    const int64_t N = x.dim(0), Di = x.dim(1), Do = w.dim(0);
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < Do; ++o) {
            Real acc = b ? b->data[static_cast<size_t>(o)] : Real(0);
            const Real* xr = x.ptr() + n * Di;
            const Real* wr = w.ptr() + o * Di;
            for (int64_t i = 0; i < Di; ++i) acc += wr[i] * xr[i];
            y.data[static_cast<size_t>(n * Do + o)] = acc;
        }
}

template <class Real>
void linear_bwd(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& w, Tensor<Real>* gx,
                Tensor<Real>* gw, Tensor<Real>* gb) {
    const int64_t N = x.dim(0), Di = x.dim(1), Do = w.dim(0);
    if (gx) {
#pragma omp parallel for schedule(static)
        for (int64_t n = 0; n < N; ++n)
            for (int64_t i = 0; i < Di; ++i) {
                Real acc = 0;
                for (int64_t o = 0; o < Do; ++o) acc += gy.data[static_cast<size_t>(n * Do + o)] * w.data[static_cast<size_t>(o * Di + i)];
                gx->data[static_cast<size_t>(n * Di + i)] = acc;
            }
    }
    if (gw) {
#pragma omp parallel for schedule(static)
        for (int64_t o = 0; o < Do; ++o)
            for (int64_t i = 0; i < Di; ++i) {
                Real acc = 0;
                for (int64_t n = 0; n < N; ++n) acc += gy.data[static_cast<size_t>(n * Do + o)] * x.data[static_cast<size_t>(n * Di + i)];
                gw->data[static_cast<size_t>(o * Di + i)] = acc;
            }
    }
    if (gb) {
#pragma omp parallel for schedule(static)
        for (int64_t o = 0; o < Do; ++o) {
            Real acc = 0;
            for (int64_t n = 0; n < N; ++n) acc += gy.data[static_cast<size_t>(n * Do + o)];
            gb->data[static_cast<size_t>(o)] = acc;
        }
    }
}

}  // namespace par

template <class Real>
void linear_fwd(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>* b, Tensor<Real>& y) {
    parallel_on() ? par::linear_fwd(x, w, b, y) : serial::linear_fwd(x, w, b, y);
}
template <class Real>
void linear_bwd(const Tensor<Real>& gy, const Tensor<Real>& x, const Tensor<Real>& w, Tensor<Real>* gx,
                Tensor<Real>* gw, Tensor<Real>* gb) {
    parallel_on() ? par::linear_bwd(gy, x, w, gx, gw, gb) : serial::linear_bwd(gy, x, w, gx, gw, gb);
}

// ---------------------------------------------------------------------------
// elementwise helpers (one implementation; each element is independent, so
// parallel results are bitwise equal to serial by construction)
// ---------------------------------------------------------------------------

template <class Real, class F>
void ew_map(const Tensor<Real>& x, Tensor<Real>& y, F f) {
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static) if (parallel_on() && n > 4096)
    for (int64_t i = 0; i < n; ++i) y.data[static_cast<size_t>(i)] = f(x.data[static_cast<size_t>(i)]);
}

template <class Real, class F>
void ew_zip(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& y, F f) {
    const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (parallel_on() && n > 4096)
    for (int64_t i = 0; i < n; ++i)
        y.data[static_cast<size_t>(i)] = f(a.data[static_cast<size_t>(i)], b.data[static_cast<size_t>(i)]);
}

// y += a * x
template <class Real>
void ew_axpy(Tensor<Real>& y, Real a, const Tensor<Real>& x) {
    const int64_t n = y.numel();
#pragma omp parallel for schedule(static) if (parallel_on() && n > 4096)
    for (int64_t i = 0; i < n; ++i) y.data[static_cast<size_t>(i)] += a * x.data[static_cast<size_t>(i)];
}

template <class Real>
Real sigmoid(Real v) {
    return Real(1) / (Real(1) + std::exp(-v));
}

// per-sample broadcast: x [N, rest...] scaled by s[n]
template <class Real>
void mul_per_sample(const Tensor<Real>& x, const std::vector<Real>& s, Tensor<Real>& y) {
    const int64_t N = x.dim(0), S = x.numel() / N;
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t n = 0; n < N; ++n) {
        const Real sv = s[static_cast<size_t>(n)];
        const Real* xs = x.ptr() + n * S;
        Real* ys = y.ptr() + n * S;
        for (int64_t i = 0; i < S; ++i) ys[i] = xs[i] * sv;
    }
}

// x [N,C,F,T] scaled per (n,f) by s [N,F]
template <class Real>
void mul_freq_scale_fwd(const Tensor<Real>& x, const Tensor<Real>& s, Tensor<Real>& y) {
    const int64_t N = x.dim(0), C = x.dim(1), F = x.dim(2), T = x.dim(3);
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const int64_t n = nc / C;
        const Real* xs = x.ptr() + nc * F * T;
        Real* ys = y.ptr() + nc * F * T;
        const Real* sr = s.ptr() + n * F;
        for (int64_t f = 0; f < F; ++f)
            for (int64_t t = 0; t < T; ++t) ys[f * T + t] = xs[f * T + t] * sr[f];
    }
}

// gradient w.r.t. the scale: gs[n,f] = sum_{c,t} gy * x
template <class Real>
void mul_freq_scale_bwd_s(const Tensor<Real>& gy, const Tensor<Real>& x, Tensor<Real>& gs) {
    const int64_t N = x.dim(0), C = x.dim(1), F = x.dim(2), T = x.dim(3);
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t nf = 0; nf < N * F; ++nf) {
        const int64_t n = nf / F, f = nf % F;
        double acc = 0;
        for (int64_t c = 0; c < C; ++c) {
            const Real* gr = gy.ptr() + ((n * C + c) * F + f) * T;
            const Real* xr = x.ptr() + ((n * C + c) * F + f) * T;
            for (int64_t t = 0; t < T; ++t) acc += static_cast<double>(gr[t]) * static_cast<double>(xr[t]);
        }
        gs.data[static_cast<size_t>(nf)] = static_cast<Real>(acc);
    }
}

// x [N,C,S] plus per-(n,c) bias e [N,C]
template <class Real>
void add_nc_bias_fwd(const Tensor<Real>& x, const Tensor<Real>& e, Tensor<Real>& y) {
    const int64_t N = x.dim(0), C = x.dim(1), S = x.numel() / (N * C);
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const Real ev = e.data[static_cast<size_t>(nc)];
        const Real* xs = x.ptr() + nc * S;
        Real* ys = y.ptr() + nc * S;
        for (int64_t s = 0; s < S; ++s) ys[s] = xs[s] + ev;
    }
}

template <class Real>
void add_nc_bias_bwd_e(const Tensor<Real>& gy, Tensor<Real>& ge) {
    const int64_t N = gy.dim(0), C = gy.dim(1), S = gy.numel() / (N * C);
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t nc = 0; nc < N * C; ++nc) {
        double acc = 0;
        const Real* gs = gy.ptr() + nc * S;
        for (int64_t s = 0; s < S; ++s) acc += static_cast<double>(gs[s]);
        ge.data[static_cast<size_t>(nc)] = static_cast<Real>(acc);
    }
}

// sum of squares over each sample: x [N, rest...] -> out[N] (double accumulate)
template <class Real>
void sumsq_per_sample(const Tensor<Real>& x, std::vector<double>& out) {
    const int64_t N = x.dim(0), S = x.numel() / N;
    out.assign(static_cast<size_t>(N), 0.0);
#pragma omp parallel for schedule(static) if (parallel_on())
    for (int64_t n = 0; n < N; ++n) {
        double acc = 0;
        const Real* xs = x.ptr() + n * S;
        for (int64_t i = 0; i < S; ++i) acc += static_cast<double>(xs[i]) * static_cast<double>(xs[i]);
        out[static_cast<size_t>(n)] = acc;
    }
}

// general axis permutation (used by the attention layout shuffles)
template <class Real>
void permute(const Tensor<Real>& x, const std::vector<int>& axes, Tensor<Real>& y) {
    const int nd = x.ndim();
    std::vector<int64_t> xstr(static_cast<size_t>(nd), 1);
    for (int i = nd - 2; i >= 0; --i) xstr[static_cast<size_t>(i)] = xstr[static_cast<size_t>(i + 1)] * x.dim(i + 1);
    std::vector<int64_t> ystr_in_x(static_cast<size_t>(nd));  // stride in x for each y axis
    for (int i = 0; i < nd; ++i) ystr_in_x[static_cast<size_t>(i)] = xstr[static_cast<size_t>(axes[static_cast<size_t>(i)])];
    const int64_t total = x.numel();
    const Shape& ys = y.shape;
#pragma omp parallel for schedule(static) if (parallel_on() && total > 4096)
    for (int64_t yi = 0; yi < total; ++yi) {
        int64_t rem = yi, xi = 0;
        for (int i = 0; i < nd; ++i) {
            int64_t block = 1;
            for (int j = i + 1; j < nd; ++j) block *= ys[static_cast<size_t>(j)];
            const int64_t idx = rem / block;
            rem -= idx * block;
            xi += idx * ystr_in_x[static_cast<size_t>(i)];
        }
        y.data[static_cast<size_t>(yi)] = x.data[static_cast<size_t>(xi)];
    }
}

}  // namespace lac::kernels
