#include "lac/network.hpp"

#include <cmath>

namespace lac {

namespace {

using Init = ParamSpec::Init;

void conv_spec(std::vector<ParamSpec>& v, const std::string& pfx, Shape wshape, bool zero = false) {
    int64_t fan_in = 1;
    for (size_t i = 1; i < wshape.size(); ++i) fan_in *= wshape[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const int64_t co = wshape[0];
    v.push_back({pfx + ".w", std::move(wshape), zero ? Init::zeros : Init::uniform, bound});
    v.push_back({pfx + ".b", {co}, zero ? Init::zeros : Init::uniform, bound});
}

void conv2d_spec(std::vector<ParamSpec>& v, const std::string& pfx, int64_t co, int64_t ci, int64_t k,
                 bool zero = false) {
    conv_spec(v, pfx, {co, ci, k, k}, zero);
}

void conv1d_spec(std::vector<ParamSpec>& v, const std::string& pfx, int64_t co, int64_t ci, int64_t k) {
    conv_spec(v, pfx, {co, ci, k});
}

void linear_spec(std::vector<ParamSpec>& v, const std::string& pfx, int64_t co, int64_t ci, bool zero = false) {
    conv_spec(v, pfx, {co, ci}, zero);
}

void gn_spec(std::vector<ParamSpec>& v, const std::string& pfx, int64_t c) {
    v.push_back({pfx + ".g", {c}, Init::ones, 0});
    v.push_back({pfx + ".b", {c}, Init::zeros, 0});
}

void res2d_spec(std::vector<ParamSpec>& v, const std::string& pfx, int64_t cin, int64_t cout, int64_t embed) {
    gn_spec(v, pfx + ".gn1", cin);
    conv2d_spec(v, pfx + ".c1", cout, cin, 3);
    if (embed > 0) linear_spec(v, pfx + ".emb", cout, embed);
    gn_spec(v, pfx + ".gn2", cout);
    conv2d_spec(v, pfx + ".c2", cout, cout, 3);
    if (cin != cout) conv2d_spec(v, pfx + ".sc", cout, cin, 1);
}

void res1d_spec(std::vector<ParamSpec>& v, const std::string& pfx, int64_t c) {
    gn_spec(v, pfx + ".gn1", c);
    conv1d_spec(v, pfx + ".c1", c, c, 3);
    gn_spec(v, pfx + ".gn2", c);
    conv1d_spec(v, pfx + ".c2", c, c, 3);
}

// pre-norm + q/k/v projections + zero-initialized output projection
void attn_spec(std::vector<ParamSpec>& v, const std::string& pfx, int64_t c) {
    gn_spec(v, pfx + ".gn", c);
    conv2d_spec(v, pfx + ".q", c, c, 1);
    conv2d_spec(v, pfx + ".k", c, c, 1);
    conv2d_spec(v, pfx + ".v", c, c, 1);
    conv2d_spec(v, pfx + ".o", c, c, 1, /*zero=*/true);
}

}  // namespace

std::vector<ParamSpec> model_param_specs(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> v;
    const int L = ModelConfig::kLevels;
    auto ch = [&](int l) { return cfg.level_channels(l); };

    // encoder
    conv2d_spec(v, "enc.in", ch(0), 2, 3);
    for (int l = 0; l < L; ++l) {
        for (int b = 0; b < cfg.res_blocks_enc_dec; ++b) {
            const int64_t cin = b == 0 ? (l == 0 ? ch(0) : ch(l - 1)) : ch(l);
            res2d_spec(v, "enc.d" + std::to_string(l) + ".b" + std::to_string(b), cin, ch(l), 0);
        }
        if (cfg.attn_levels.count(l)) attn_spec(v, "enc.d" + std::to_string(l) + ".attn", ch(l));
    }
    conv1d_spec(v, "enc.flat", cfg.channels_1d, cfg.flat_channels(), 1);
    for (int i = 0; i < cfg.res_blocks_1d; ++i) res1d_spec(v, "enc.r1d" + std::to_string(i), cfg.channels_1d);
    conv1d_spec(v, "enc.out", cfg.d_lat, cfg.channels_1d, 1);

    // decoder (mirrors the encoder; no skip inputs)
    conv1d_spec(v, "dec.in", cfg.channels_1d, cfg.d_lat, 1);
    for (int i = 0; i < cfg.res_blocks_1d; ++i) res1d_spec(v, "dec.r1d" + std::to_string(i), cfg.channels_1d);
    conv1d_spec(v, "dec.unflat", cfg.flat_channels(), cfg.channels_1d, 1);
    for (int l = L - 1; l >= 0; --l) {
        for (int b = 0; b < cfg.res_blocks_enc_dec; ++b) {
            const int64_t cin = b == 0 ? (l == L - 1 ? ch(l) : ch(l + 1)) : ch(l);
            res2d_spec(v, "dec.u" + std::to_string(l) + ".b" + std::to_string(b), cin, ch(l), 0);
        }
        if (cfg.attn_levels.count(l)) attn_spec(v, "dec.u" + std::to_string(l) + ".attn", ch(l));
    }

    // consistency UNet
    conv2d_spec(v, "unet.in", ch(0), 2, 3);
    for (int l = 0; l < L; ++l) {
        for (int b = 0; b < cfg.res_blocks_unet; ++b) {
            const int64_t cin = b == 0 ? (l == 0 ? ch(0) : ch(l - 1)) : ch(l);
            res2d_spec(v, "unet.d" + std::to_string(l) + ".b" + std::to_string(b), cin, ch(l), cfg.embed_channels);
        }
        if (cfg.attn_levels.count(l)) attn_spec(v, "unet.d" + std::to_string(l) + ".attn", ch(l));
        if (cfg.cross_to_down_branch) conv2d_spec(v, "unet.d" + std::to_string(l) + ".cross", ch(l), ch(l), 1);
    }
    for (int l = L - 1; l >= 0; --l) {
        const int64_t cin = l == L - 1 ? ch(l) : ch(l + 1);
        res2d_spec(v, "unet.u" + std::to_string(l) + ".b0", cin, ch(l), cfg.embed_channels);
        conv2d_spec(v, "unet.u" + std::to_string(l) + ".cross", ch(l), ch(l), 1);
        for (int b = 1; b < cfg.res_blocks_unet; ++b)
            res2d_spec(v, "unet.u" + std::to_string(l) + ".b" + std::to_string(b), ch(l), ch(l), cfg.embed_channels);
        if (cfg.attn_levels.count(l)) attn_spec(v, "unet.u" + std::to_string(l) + ".attn", ch(l));
    }
    gn_spec(v, "unet.out.gn", ch(0));
    conv2d_spec(v, "unet.out", 2, ch(0), 3);

    // noise conditioning MLP and the two adaptive frequency scaling heads
    linear_spec(v, "emb.l1", cfg.embed_channels, cfg.embed_channels);
    linear_spec(v, "emb.l2", cfg.embed_channels, cfg.embed_channels);
    linear_spec(v, "scale_in.l1", cfg.embed_channels, cfg.embed_channels);
    linear_spec(v, "scale_in.l2", cfg.freq_bins, cfg.embed_channels, /*zero=*/true);
    linear_spec(v, "scale_out.l1", cfg.embed_channels, cfg.embed_channels);
    linear_spec(v, "scale_out.l2", cfg.freq_bins, cfg.embed_channels, /*zero=*/true);
    return v;
}

int64_t count_parameters(const ModelConfig& cfg) {
    int64_t n = 0;
    for (const auto& sp : model_param_specs(cfg)) n += numel_of(sp.shape);
    return n;
}

}  // namespace lac
