#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "lac/kernels.hpp"

using namespace lac;
using testutil::bitwise_equal;
using testutil::random_tensor;

namespace {

struct ExecGuard {
    kernels::Exec prev;
    explicit ExecGuard(kernels::Exec m) : prev(kernels::exec_mode()) { kernels::exec_mode() = m; }
    ~ExecGuard() { kernels::exec_mode() = prev; }
};

}  // namespace

TEST_CASE("conv2d matches a hand-computed 1x1 case") {
    // single pixel, identity-style weights
    Tensor<double> x({1, 2, 1, 1});
    x.data = {3.0, -2.0};
    Tensor<double> w({1, 2, 1, 1});
    w.data = {0.5, 1.5};
    Tensor<double> b({1});
    b.data = {0.25};
    Tensor<double> y({1, 1, 1, 1});
    kernels::serial::conv2d_fwd(x, w, &b, y);
    CHECK(y.data[0] == doctest::Approx(3.0 * 0.5 - 2.0 * 1.5 + 0.25));
}

TEST_CASE("conv2d zero padding leaves borders consistent with explicit sum") {
    Rng rng(7);
    auto x = random_tensor<double>({1, 1, 4, 5}, rng);
    auto w = random_tensor<double>({1, 1, 3, 3}, rng);
    Tensor<double> y({1, 1, 4, 5});
    kernels::serial::conv2d_fwd<double>(x, w, nullptr, y);
    // corner (0,0): only kernel taps landing inside contribute
    double want = 0;
    for (int p = 1; p < 3; ++p)
        for (int q = 1; q < 3; ++q) want += w.data[static_cast<size_t>(p * 3 + q)] * x.data[static_cast<size_t>((p - 1) * 5 + (q - 1))];
    CHECK(y.data[0] == doctest::Approx(want));
}

TEST_CASE("serial and parallel kernel variants agree bitwise") {
    Rng rng(42);
    const int64_t N = 2, Ci = 3, Co = 5, F = 12, T = 9;
    auto x = random_tensor<float>({N, Ci, F, T}, rng);
    auto w = random_tensor<float>({Co, Ci, 3, 3}, rng);
    auto b = random_tensor<float>({Co}, rng);
    auto gy = random_tensor<float>({N, Co, F, T}, rng);

    Tensor<float> ys({N, Co, F, T}), yp({N, Co, F, T});
    kernels::serial::conv2d_fwd(x, w, &b, ys);
    kernels::par::conv2d_fwd(x, w, &b, yp);
    CHECK(bitwise_equal(ys, yp));

    Tensor<float> gxs({N, Ci, F, T}), gxp({N, Ci, F, T});
    kernels::serial::conv2d_bwd_x(gy, w, gxs);
    kernels::par::conv2d_bwd_x(gy, w, gxp);
    CHECK(bitwise_equal(gxs, gxp));

    Tensor<float> gws({Co, Ci, 3, 3}), gwp({Co, Ci, 3, 3}), gbs({Co}), gbp({Co});
    kernels::serial::conv2d_bwd_w(gy, x, gws, &gbs);
    kernels::par::conv2d_bwd_w(gy, x, gwp, &gbp);
    CHECK(bitwise_equal(gws, gwp));
    CHECK(bitwise_equal(gbs, gbp));

    const int64_t L = 17;
    auto x1 = random_tensor<float>({N, Ci, L}, rng);
    auto w1 = random_tensor<float>({Co, Ci, 3}, rng);
    auto gy1 = random_tensor<float>({N, Co, L}, rng);
    Tensor<float> y1s({N, Co, L}), y1p({N, Co, L});
    kernels::serial::conv1d_fwd(x1, w1, &b, y1s);
    kernels::par::conv1d_fwd(x1, w1, &b, y1p);
    CHECK(bitwise_equal(y1s, y1p));
    Tensor<float> gx1s({N, Ci, L}), gx1p({N, Ci, L});
    kernels::serial::conv1d_bwd_x(gy1, w1, gx1s);
    kernels::par::conv1d_bwd_x(gy1, w1, gx1p);
    CHECK(bitwise_equal(gx1s, gx1p));
    Tensor<float> gw1s({Co, Ci, 3}), gw1p({Co, Ci, 3});
    kernels::serial::conv1d_bwd_w(gy1, x1, gw1s, &gbs);
    kernels::par::conv1d_bwd_w(gy1, x1, gw1p, &gbp);
    CHECK(bitwise_equal(gw1s, gw1p));
    CHECK(bitwise_equal(gbs, gbp));

    const int64_t C = 6, groups = 3;
    auto xg = random_tensor<float>({N, C, F, T}, rng);
    auto gamma = random_tensor<float>({C}, rng);
    auto beta = random_tensor<float>({C}, rng);
    auto gyg = random_tensor<float>({N, C, F, T}, rng);
    Tensor<float> ygs({N, C, F, T}), ygp({N, C, F, T});
    Tensor<float> ms({N * groups}), rs({N * groups}), mp({N * groups}), rp({N * groups});
    kernels::serial::groupnorm_fwd(xg, gamma, beta, groups, 1e-6, ygs, ms, rs);
    kernels::par::groupnorm_fwd(xg, gamma, beta, groups, 1e-6, ygp, mp, rp);
    CHECK(bitwise_equal(ygs, ygp));
    Tensor<float> gxgs({N, C, F, T}), gxgp({N, C, F, T});
    kernels::serial::groupnorm_bwd_x(gyg, xg, gamma, ms, rs, groups, gxgs);
    kernels::par::groupnorm_bwd_x(gyg, xg, gamma, mp, rp, groups, gxgp);
    CHECK(bitwise_equal(gxgs, gxgp));
    Tensor<float> ggs({C}), gbs2({C}), ggp({C}), gbp2({C});
    kernels::serial::groupnorm_bwd_affine(gyg, xg, ms, rs, groups, ggs, gbs2);
    kernels::par::groupnorm_bwd_affine(gyg, xg, mp, rp, groups, ggp, gbp2);
    CHECK(bitwise_equal(ggs, ggp));
    CHECK(bitwise_equal(gbs2, gbp2));

    const int64_t B = 4, M = 6, K = 5, Nn = 7;
    auto a = random_tensor<float>({B, M, K}, rng);
    auto bb = random_tensor<float>({B, K, Nn}, rng);
    auto bt = random_tensor<float>({B, Nn, K}, rng);
    Tensor<float> os({B, M, Nn}), op({B, M, Nn});
    kernels::serial::bmm(a, bb, false, os);
    kernels::par::bmm(a, bb, false, op);
    CHECK(bitwise_equal(os, op));
    kernels::serial::bmm(a, bt, true, os);
    kernels::par::bmm(a, bt, true, op);
    CHECK(bitwise_equal(os, op));
    Tensor<float> ts({B, K, Nn}), tp({B, K, Nn});
    auto cc = random_tensor<float>({B, M, Nn}, rng);
    kernels::serial::bmm_tn(a, cc, ts);
    kernels::par::bmm_tn(a, cc, tp);
    CHECK(bitwise_equal(ts, tp));

    auto sx = random_tensor<float>({B, M, K}, rng);
    Tensor<float> sys({B, M, K}), syp({B, M, K});
    kernels::serial::softmax_last(sx, sys);
    kernels::par::softmax_last(sx, syp);
    CHECK(bitwise_equal(sys, syp));

    Tensor<float> lys({N, Co}), lyp({N, Co});
    auto lx = random_tensor<float>({N, Ci}, rng);
    auto lw = random_tensor<float>({Co, Ci}, rng);
    kernels::serial::linear_fwd(lx, lw, &b, lys);
    kernels::par::linear_fwd(lx, lw, &b, lyp);
    CHECK(bitwise_equal(lys, lyp));
}

TEST_CASE("dispatch respects exec mode") {
    Rng rng(3);
    auto x = random_tensor<float>({1, 2, 8, 8}, rng);
    auto w = random_tensor<float>({3, 2, 3, 3}, rng);
    Tensor<float> y1({1, 3, 8, 8}), y2({1, 3, 8, 8});
    {
        ExecGuard g(kernels::Exec::serial);
        kernels::conv2d_fwd<float>(x, w, nullptr, y1);
    }
    {
        ExecGuard g(kernels::Exec::parallel);
        kernels::conv2d_fwd<float>(x, w, nullptr, y2);
    }
    CHECK(bitwise_equal(y1, y2));
}

TEST_CASE("avgpool/upsample shapes and values") {
    Tensor<float> x({1, 1, 2, 4});
    x.data = {1, 2, 3, 4, 5, 6, 7, 8};
    Tensor<float> y({1, 1, 1, 2});
    kernels::avgpool2d_fwd(x, 2, 2, y);
    CHECK(y.data[0] == doctest::Approx((1 + 2 + 5 + 6) / 4.0));
    CHECK(y.data[1] == doctest::Approx((3 + 4 + 7 + 8) / 4.0));

    Tensor<float> up({1, 1, 2, 4});
    kernels::upsample2d_fwd(y, 2, 2, up);
    CHECK(up.data[0] == y.data[0]);
    CHECK(up.data[7] == y.data[1]);
}

TEST_CASE("permute round-trips") {
    Rng rng(9);
    auto x = random_tensor<float>({2, 3, 4, 5}, rng);
    Tensor<float> y({4, 2, 5, 3});
    kernels::permute(x, {2, 0, 3, 1}, y);
    Tensor<float> back({2, 3, 4, 5});
    kernels::permute(y, {1, 3, 0, 2}, back);
    CHECK(bitwise_equal(x, back));
}
