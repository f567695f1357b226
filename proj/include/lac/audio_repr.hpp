#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "lac/errors.hpp"
#include "lac/tensor.hpp"

// Conversions between waveforms and the 2-channel complex spectrogram the
// model consumes. Framing convention: frame i covers samples
// [i*hop, i*hop + window) with a periodic Hann window and no centering, so
// a chunk of (frames-1)*hop + window samples maps to exactly `frames`
// columns and back. The window/2+1 one-sided bins are stored in window/2
// rows by packing the purely real Nyquist bin into the imaginary slot of
// the purely real DC bin, keeping the transform exactly invertible on a
// power-of-two frequency axis.

namespace lac {

struct Waveform {
    std::vector<float> samples;
    int sample_rate = 0;
};

struct AmplitudeTransform {
    double alpha = 0.65;
    double beta = 0.35;
    void validate() const {
        require_config(alpha > 0 && alpha <= 1, "amplitude transform: alpha must be in (0,1]");
        require_config(beta > 0, "amplitude transform: beta must be positive");
    }
};

template <class Real>
struct Spectrogram {
    Tensor<Real> data;  // [2, F, T]; channel 0 real, channel 1 imaginary
    bool compressed = false;
    int hop = 0;
    int window = 0;

    int64_t freq_bins() const { return data.dim(1); }
    int64_t frames() const { return data.dim(2); }
};

inline bool is_pow2(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

inline int64_t stft_frame_count(int64_t len, int hop, int window) {
    require_range(len >= window, "stft: input shorter than the analysis window");
    return 1 + (len - window) / hop;
}

inline int64_t chunk_samples(int hop, int window, int64_t frames) { return (frames - 1) * hop + window; }

// Samples with full analysis-window overlap; reconstruction is exact here.
inline std::pair<int64_t, int64_t> stft_valid_region(int64_t len, int hop, int window) {
    const int64_t edge = window - hop;
    return {edge, len - edge};
}

template <class Real>
std::vector<Real> hann_window(int n) {
    std::vector<Real> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] =
            static_cast<Real>(0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * i / static_cast<double>(n)));
    return w;
}

// In-place iterative radix-2 FFT; size must be a power of two.
template <class Real>
void fft_inplace(std::vector<std::complex<Real>>& a, bool inverse) {
    const size_t n = a.size();
    require(is_pow2(static_cast<int64_t>(n)), "fft: size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<Real> wl(static_cast<Real>(std::cos(ang)), static_cast<Real>(std::sin(ang)));
        for (size_t i = 0; i < n; i += len) {
            std::complex<Real> w(1, 0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<Real> u = a[i + k];
                const std::complex<Real> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const Real inv = Real(1) / static_cast<Real>(n);
        for (auto& v : a) v *= inv;
    }
}

template <class Real>
Spectrogram<Real> stft(const std::vector<Real>& x, int hop, int window) {
    require_config(hop > 0 && window >= hop && is_pow2(window), "stft: window must be a power of two, hop in (0, window]");
    const int64_t T = stft_frame_count(static_cast<int64_t>(x.size()), hop, window);
    const int64_t F = window / 2;
    const std::vector<Real> win = hann_window<Real>(window);

    Spectrogram<Real> out;
    out.data = Tensor<Real>({2, F, T});
    out.hop = hop;
    out.window = window;

    std::vector<std::complex<Real>> buf(static_cast<size_t>(window));
    for (int64_t t = 0; t < T; ++t) {
        const int64_t off = t * hop;
        for (int i = 0; i < window; ++i)
            buf[static_cast<size_t>(i)] = std::complex<Real>(x[static_cast<size_t>(off + i)] * win[static_cast<size_t>(i)], 0);
        fft_inplace(buf, false);
        for (int64_t f = 0; f < F; ++f) {
            out.data.data[static_cast<size_t>(f * T + t)] = buf[static_cast<size_t>(f)].real();
            out.data.data[static_cast<size_t>((F + f) * T + t)] = buf[static_cast<size_t>(f)].imag();
        }
        // DC and Nyquist are purely real for real input; pack Nyquist into
        // the DC imaginary slot
        out.data.data[static_cast<size_t>(F * T + t)] = buf[static_cast<size_t>(F)].real();
    }
    return out;
}

// Weighted overlap-add inverse: synthesis window equals the analysis
// window, normalized by the accumulated squared window.
template <class Real>
std::vector<Real> istft(const Spectrogram<Real>& s) {
    if (s.compressed) throw StateError("istft: spectrogram is amplitude-compressed; expand first");
    const int hop = s.hop, window = s.window;
    require_config(hop > 0 && window == 2 * static_cast<int>(s.freq_bins()), "istft: inconsistent stft params");
    const int64_t F = s.freq_bins(), T = s.frames();
    const int64_t len = chunk_samples(hop, window, T);
    const std::vector<Real> win = hann_window<Real>(window);

    std::vector<double> acc(static_cast<size_t>(len), 0.0);
    std::vector<double> wsum(static_cast<size_t>(len), 0.0);
    std::vector<std::complex<Real>> buf(static_cast<size_t>(window));
    for (int64_t t = 0; t < T; ++t) {
        for (int64_t f = 0; f < F; ++f)
            buf[static_cast<size_t>(f)] = std::complex<Real>(s.data.data[static_cast<size_t>(f * T + t)],
                                                             s.data.data[static_cast<size_t>((F + f) * T + t)]);
        // unpack Nyquist from the DC imaginary slot
        buf[static_cast<size_t>(F)] = std::complex<Real>(buf[0].imag(), 0);
        buf[0] = std::complex<Real>(buf[0].real(), 0);
        for (int64_t f = F + 1; f < window; ++f) buf[static_cast<size_t>(f)] = std::conj(buf[static_cast<size_t>(window - f)]);
        fft_inplace(buf, true);
        const int64_t off = t * hop;
        for (int i = 0; i < window; ++i) {
            const double wv = static_cast<double>(win[static_cast<size_t>(i)]);
            acc[static_cast<size_t>(off + i)] += static_cast<double>(buf[static_cast<size_t>(i)].real()) * wv;
            wsum[static_cast<size_t>(off + i)] += wv * wv;
        }
    }
    std::vector<Real> out(static_cast<size_t>(len), Real(0));
    for (int64_t i = 0; i < len; ++i)
        if (wsum[static_cast<size_t>(i)] > 1e-10) out[static_cast<size_t>(i)] = static_cast<Real>(acc[static_cast<size_t>(i)] / wsum[static_cast<size_t>(i)]);
    return out;
}

// c~ = beta |c|^alpha e^{i angle(c)}; zero maps to zero, phase untouched.
template <class Real>
Spectrogram<Real> amplitude_compress(const Spectrogram<Real>& s, const AmplitudeTransform& p) {
    if (s.compressed) throw StateError("amplitude_compress: already compressed");
    p.validate();
    const int64_t F = s.freq_bins(), T = s.frames();
    Spectrogram<Real> out = s;
    out.compressed = true;
    for (int64_t i = 0; i < F * T; ++i) {
        const double re = static_cast<double>(s.data.data[static_cast<size_t>(i)]);
        const double im = static_cast<double>(s.data.data[static_cast<size_t>(F * T + i)]);
        const double mag = std::hypot(re, im);
        const double ratio = mag > 0 ? p.beta * std::pow(mag, p.alpha) / mag : 0.0;
        out.data.data[static_cast<size_t>(i)] = static_cast<Real>(re * ratio);
        out.data.data[static_cast<size_t>(F * T + i)] = static_cast<Real>(im * ratio);
    }
    return out;
}

template <class Real>
Spectrogram<Real> amplitude_expand(const Spectrogram<Real>& s, const AmplitudeTransform& p) {
    if (!s.compressed) throw StateError("amplitude_expand: spectrogram is not compressed");
    p.validate();
    const int64_t F = s.freq_bins(), T = s.frames();
    Spectrogram<Real> out = s;
    out.compressed = false;
    for (int64_t i = 0; i < F * T; ++i) {
        const double re = static_cast<double>(s.data.data[static_cast<size_t>(i)]);
        const double im = static_cast<double>(s.data.data[static_cast<size_t>(F * T + i)]);
        const double mag = std::hypot(re, im);
        const double ratio = mag > 0 ? std::pow(mag / p.beta, 1.0 / p.alpha) / mag : 0.0;
        out.data.data[static_cast<size_t>(i)] = static_cast<Real>(re * ratio);
        out.data.data[static_cast<size_t>(F * T + i)] = static_cast<Real>(im * ratio);
    }
    return out;
}

}  // namespace lac
