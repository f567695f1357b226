// Times the OpenMP kernels against their serial reference implementations
// on shapes representative of the full-size model.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lac/audio_repr.hpp"
#include "lac/kernels.hpp"
#include "lac/rng.hpp"

using namespace lac;
using Clock = std::chrono::high_resolution_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const std::string& name, const std::function<void()>& fn, int reps) {
    kernels::exec_mode() = kernels::Exec::serial;
    const double ser = time_ms(fn, reps);
    kernels::exec_mode() = kernels::Exec::parallel;
    const double par = time_ms(fn, reps);
    std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %.2fx\n", name.c_str(), ser, par, ser / par);
}

}  // namespace

int main() {
    Rng rng(1234);

    {
        const int64_t N = 4, Ci = 64, Co = 64, F = 128, T = 64;
        Tensor<float> x({N, Ci, F, T}), w({Co, Ci, 3, 3}), b({Co}), y({N, Co, F, T});
        fill_normal(x, rng);
        fill_normal(w, rng, 0.05);
        fill_normal(b, rng);
        report("conv2d fwd 64x64 128x64", [&] { kernels::conv2d_fwd(x, w, &b, y); }, 3);
        Tensor<float> gx({N, Ci, F, T}), gw({Co, Ci, 3, 3}), gb({Co});
        report("conv2d bwd_x", [&] { kernels::conv2d_bwd_x(y, w, gx); }, 3);
        report("conv2d bwd_w", [&] { kernels::conv2d_bwd_w(y, x, gw, &gb); }, 3);
    }
    {
        const int64_t N = 4, C = 256, F = 64, T = 16;
        Tensor<float> x({N, C, F, T}), gamma({C}, 1.0f), beta({C}), y({N, C, F, T});
        Tensor<float> mean({N * 32}), rstd({N * 32});
        fill_normal(x, rng);
        report("groupnorm fwd 256ch", [&] { kernels::groupnorm_fwd(x, gamma, beta, 32, 1e-6, y, mean, rstd); }, 20);
    }
    {
        const int64_t B = 4 * 4 * 16, Fq = 128, d = 64;
        Tensor<float> q({B, Fq, d}), k({B, Fq, d}), a({B, Fq, Fq}), v({B, Fq, d}), o({B, Fq, d});
        fill_normal(q, rng);
        fill_normal(k, rng);
        fill_normal(v, rng);
        report("attention qk^T", [&] { kernels::bmm(q, k, true, a); }, 5);
        report("attention softmax", [&] { kernels::softmax_last(a, a); }, 5);
        report("attention av", [&] { kernels::bmm(a, v, false, o); }, 5);
    }
    {
        std::vector<float> wav(34304);
        Rng r2(7);
        for (auto& s : wav) s = static_cast<float>(0.3 * r2.normal());
        report("stft+istft 34304 smp", [&] {
            auto sp = stft(wav, 512, 2048);
            auto back = istft(sp);
            (void)back;
        }, 5);
    }
    return 0;
}
