#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lac/autodiff.hpp"
#include "lac/model_config.hpp"
#include "lac/rng.hpp"
#include "lac/schedule.hpp"

namespace lac {

struct ParamSpec {
    enum class Init { uniform, zeros, ones };
    std::string name;
    Shape shape;
    Init init = Init::uniform;
    double bound = 0;  // uniform init draws from [-bound, bound]
};

// One spec per trainable tensor, in a fixed order shared by init,
// checkpointing and the optimizer state.
std::vector<ParamSpec> model_param_specs(const ModelConfig& cfg);
int64_t count_parameters(const ModelConfig& cfg);

template <class Real>
struct ParamStore {
    std::vector<ParamSpec> specs;
    std::unordered_map<std::string, ad::Var<Real>> vars;

    static ParamStore random_init(const ModelConfig& cfg, uint64_t seed) {
        ParamStore ps;
        ps.specs = model_param_specs(cfg);
        Rng rng(seed, RngStream::init, 0);
        for (const auto& sp : ps.specs) {
            Tensor<Real> t(sp.shape);
            switch (sp.init) {
                case ParamSpec::Init::uniform:
                    fill_uniform(t, rng, -sp.bound, sp.bound);
                    break;
                case ParamSpec::Init::ones:
                    for (auto& v : t.data) v = Real(1);
                    break;
                case ParamSpec::Init::zeros:
                    break;
            }
            ps.vars.emplace(sp.name, ad::Var<Real>::leaf(std::move(t), true));
        }
        return ps;
    }

    static ParamStore from_tensors(const ModelConfig& cfg, std::unordered_map<std::string, Tensor<Real>> tensors) {
        ParamStore ps;
        ps.specs = model_param_specs(cfg);
        for (const auto& sp : ps.specs) {
            auto it = tensors.find(sp.name);
            require_data(it != tensors.end(), "missing model tensor: " + sp.name);
            require_data(it->second.shape == sp.shape, "shape mismatch for tensor " + sp.name);
            ps.vars.emplace(sp.name, ad::Var<Real>::leaf(std::move(it->second), true));
        }
        return ps;
    }

    ad::Var<Real> operator()(const std::string& name) const {
        auto it = vars.find(name);
        require(it != vars.end(), "unknown parameter: " + name);
        return it->second;
    }

    int64_t count() const {
        int64_t n = 0;
        for (const auto& sp : specs) n += numel_of(sp.shape);
        return n;
    }

    void zero_grads() {
        for (auto& [k, v] : vars) v.reset_grad();
    }
};

// log(sigma)/4, the scalar fed to the sinusoidal embedding
inline double noise_embedding_input(double sigma) {
    if (!(sigma > 0)) throw RangeError("noise embedding: sigma must be positive");
    return std::log(sigma) / 4.0;
}

// [N, dims] sinusoidal embedding of log(sigma)/4 per sample
template <class Real>
Tensor<Real> noise_embedding(const std::vector<double>& sigmas, int64_t dims) {
    const int64_t N = static_cast<int64_t>(sigmas.size());
    const int64_t half = dims / 2;
    Tensor<Real> out({N, dims});
    for (int64_t n = 0; n < N; ++n) {
        const double s = noise_embedding_input(sigmas[static_cast<size_t>(n)]);
        for (int64_t j = 0; j < half; ++j) {
            const double freq = std::pow(10000.0, static_cast<double>(j) / static_cast<double>(half - 1));
            out.data[static_cast<size_t>(n * dims + j)] = static_cast<Real>(std::sin(s * freq));
            out.data[static_cast<size_t>(n * dims + half + j)] = static_cast<Real>(std::cos(s * freq));
        }
    }
    return out;
}

// Graph builders over a ParamStore. Every method is a pure function of
// (weights, inputs); with grad mode off the same code runs as plain
// inference.
template <class Real>
struct Net {
    using V = ad::Var<Real>;

    const ModelConfig& cfg;
    const ParamStore<Real>& P;

    Net(const ModelConfig& c, const ParamStore<Real>& p) : cfg(c), P(p) {}

    static std::string lvl(const char* base, int l) { return std::string(base) + std::to_string(l); }

    V res2d(V x, const std::string& pfx, int64_t cin, int64_t cout, const V* cond) const {
        V h = ad::groupnorm(x, P(pfx + ".gn1.g"), P(pfx + ".gn1.b"), ModelConfig::groups_for(cin),
                            ModelConfig::kGroupNormEps);
        h = ad::swish(h);
        h = ad::conv2d(h, P(pfx + ".c1.w"), P(pfx + ".c1.b"));
        if (cond) h = ad::add_nc_bias(h, ad::linear(*cond, P(pfx + ".emb.w"), P(pfx + ".emb.b")));
        h = ad::groupnorm(h, P(pfx + ".gn2.g"), P(pfx + ".gn2.b"), ModelConfig::groups_for(cout),
                          ModelConfig::kGroupNormEps);
        h = ad::swish(h);
        h = ad::conv2d(h, P(pfx + ".c2.w"), P(pfx + ".c2.b"));
        V skip = (cin == cout) ? x : ad::conv2d(x, P(pfx + ".sc.w"), P(pfx + ".sc.b"));
        return ad::add(h, skip);
    }

    V res1d(V x, const std::string& pfx, int64_t c) const {
        V h = ad::groupnorm(x, P(pfx + ".gn1.g"), P(pfx + ".gn1.b"), ModelConfig::groups_for(c),
                            ModelConfig::kGroupNormEps);
        h = ad::swish(h);
        h = ad::conv1d(h, P(pfx + ".c1.w"), P(pfx + ".c1.b"));
        h = ad::groupnorm(h, P(pfx + ".gn2.g"), P(pfx + ".gn2.b"), ModelConfig::groups_for(c),
                          ModelConfig::kGroupNormEps);
        h = ad::swish(h);
        h = ad::conv1d(h, P(pfx + ".c2.w"), P(pfx + ".c2.b"));
        return ad::add(h, x);
    }

    // Per-timestep attention over frequency bins: projections, scaled
    // dot-product across F only, zero-initialized output projection.
    // No normalization inside, so outputs at a timestep depend only on
    // inputs at that timestep.
    V attn_inner(V h, const std::string& pfx, int64_t C, V* maps_out = nullptr) const {
        const auto& s = h.val().shape;
        const int64_t N = s[0], F = s[2], T = s[3];
        const int64_t heads = cfg.attn_heads, dh = C / heads;
        require_config(C % heads == 0, "freq_attention: channels not divisible by heads");

        auto to_tokens = [&](V q) {
            q = ad::reshape(q, {N, heads, dh, F, T});
            q = ad::permute(q, {0, 1, 4, 3, 2});  // [N, heads, T, F, dh]
            return ad::reshape(q, {N * heads * T, F, dh});
        };
        V q = to_tokens(ad::conv2d(h, P(pfx + ".q.w"), P(pfx + ".q.b")));
        V k = to_tokens(ad::conv2d(h, P(pfx + ".k.w"), P(pfx + ".k.b")));
        V v = to_tokens(ad::conv2d(h, P(pfx + ".v.w"), P(pfx + ".v.b")));

        V scores = ad::scale(ad::bmm(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh)));
        V attn = ad::softmax_last(scores);  // rows over F sum to one
        if (maps_out) *maps_out = attn;
        V out = ad::bmm(attn, v, false);  // [N*heads*T, F, dh]
        out = ad::reshape(out, {N, heads, T, F, dh});
        out = ad::permute(out, {0, 1, 4, 3, 2});  // [N, heads, dh, F, T]
        out = ad::reshape(out, {N, C, F, T});
        return ad::conv2d(out, P(pfx + ".o.w"), P(pfx + ".o.b"));
    }

    // the frequency-wise self-attention operation: residual around the core
    V freq_attention(V features, const std::string& pfx, int64_t C, V* maps_out = nullptr) const {
        return ad::add(features, attn_inner(features, pfx, C, maps_out));
    }

    // pre-normalized attention block used inside the towers
    V attn_block(V x, const std::string& pfx, int64_t C) const {
        V n = ad::groupnorm(x, P(pfx + ".gn.g"), P(pfx + ".gn.b"), ModelConfig::groups_for(C),
                            ModelConfig::kGroupNormEps);
        return ad::add(x, attn_inner(n, pfx, C));
    }

    // ----- encoder: compressed spectrogram [N,2,F,T] -> latents [N,d_lat,L]
    V encode(V spec) const {
        const auto& s = spec.val().shape;
        require_shape(s.size() == 4 && s[1] == 2 && s[2] == cfg.freq_bins && s[3] % cfg.frames_per_latent() == 0,
                      "encode: expected [N,2," + std::to_string(cfg.freq_bins) + ",T] with T divisible by " +
                          std::to_string(cfg.frames_per_latent()));
        V h = ad::conv2d(spec, P("enc.in.w"), P("enc.in.b"));
        for (int l = 0; l < ModelConfig::kLevels; ++l) {
            const int64_t cl = cfg.level_channels(l);
            for (int b = 0; b < cfg.res_blocks_enc_dec; ++b) {
                const int64_t cin = b == 0 ? (l == 0 ? cfg.level_channels(0) : cfg.level_channels(l - 1)) : cl;
                h = res2d(h, lvl("enc.d", l) + ".b" + std::to_string(b), cin, cl, nullptr);
            }
            if (cfg.attn_levels.count(l)) h = attn_block(h, lvl("enc.d", l) + ".attn", cl);
            if (l + 1 < ModelConfig::kLevels) h = ad::avgpool2d(h, 2, cfg.halves_time(l) ? 2 : 1);
        }
        // flatten frequency into channels, 1-D bottleneck, tanh latent head
        const int64_t L = h.val().dim(3);
        h = ad::reshape(h, {h.val().dim(0), cfg.flat_channels(), L});
        h = ad::conv1d(h, P("enc.flat.w"), P("enc.flat.b"));
        for (int i = 0; i < cfg.res_blocks_1d; ++i) h = res1d(h, "enc.r1d" + std::to_string(i), cfg.channels_1d);
        h = ad::conv1d(h, P("enc.out.w"), P("enc.out.b"));
        return ad::tanh_op(h);
    }

    // ----- decoder: latents [N,d_lat,L] -> one feature tensor per level
    std::vector<V> decode_features(V lat) const {
        const auto& s = lat.val().shape;
        require_shape(s.size() == 3 && s[1] == cfg.d_lat && s[2] >= 1, "decode_features: expected [N,d_lat,L]");
        V h = ad::conv1d(lat, P("dec.in.w"), P("dec.in.b"));
        for (int i = 0; i < cfg.res_blocks_1d; ++i) h = res1d(h, "dec.r1d" + std::to_string(i), cfg.channels_1d);
        h = ad::conv1d(h, P("dec.unflat.w"), P("dec.unflat.b"));
        h = ad::reshape(h, {s[0], cfg.level_channels(ModelConfig::kLevels - 1), cfg.level_freq(ModelConfig::kLevels - 1), s[2]});

        std::vector<V> feats(ModelConfig::kLevels);
        for (int l = ModelConfig::kLevels - 1; l >= 0; --l) {
            const int64_t cl = cfg.level_channels(l);
            for (int b = 0; b < cfg.res_blocks_enc_dec; ++b) {
                const int64_t cin = b == 0 ? (l == ModelConfig::kLevels - 1 ? cl : cfg.level_channels(l + 1)) : cl;
                h = res2d(h, lvl("dec.u", l) + ".b" + std::to_string(b), cin, cl, nullptr);
            }
            if (cfg.attn_levels.count(l)) h = attn_block(h, lvl("dec.u", l) + ".attn", cl);
            feats[static_cast<size_t>(l)] = h;
            if (l > 0) h = ad::upsample2d(h, 2, cfg.halves_time(l - 1) ? 2 : 1);
        }
        return feats;
    }

    // conditioning vector shared by every UNet residual block
    V noise_cond(const std::vector<double>& sigmas) const {
        V e = V::constant(noise_embedding<Real>(sigmas, cfg.embed_channels));
        V h = ad::swish(ad::linear(e, P("emb.l1.w"), P("emb.l1.b")));
        return ad::linear(h, P("emb.l2.w"), P("emb.l2.b"));
    }

    // adaptive per-frequency scale vector s_f(sigma) = 1 + MLP(embedding);
    // the final layer starts at zero so both scalings begin as identity
    V freq_scale(const std::vector<double>& sigmas, const std::string& pfx) const {
        V e = V::constant(noise_embedding<Real>(sigmas, cfg.embed_channels));
        V h = ad::swish(ad::linear(e, P(pfx + ".l1.w"), P(pfx + ".l1.b")));
        V r = ad::linear(h, P(pfx + ".l2.w"), P(pfx + ".l2.b"));  // [N, F]
        return ad::add(r, V::constant(Tensor<Real>::full(r.val().shape, Real(1))));
    }

    // raw UNet trunk on an already-scaled input
    V unet_trunk(V x, V cond, const std::vector<V>& y) const {
        V h = ad::conv2d(x, P("unet.in.w"), P("unet.in.b"));
        std::vector<V> skips(ModelConfig::kLevels);
        for (int l = 0; l < ModelConfig::kLevels; ++l) {
            const int64_t cl = cfg.level_channels(l);
            for (int b = 0; b < cfg.res_blocks_unet; ++b) {
                const int64_t cin = b == 0 ? (l == 0 ? cfg.level_channels(0) : cfg.level_channels(l - 1)) : cl;
                h = res2d(h, lvl("unet.d", l) + ".b" + std::to_string(b), cin, cl, &cond);
            }
            if (cfg.attn_levels.count(l)) h = attn_block(h, lvl("unet.d", l) + ".attn", cl);
            if (cfg.cross_to_down_branch)
                h = ad::add(h, ad::conv2d(y[static_cast<size_t>(l)], P(lvl("unet.d", l) + ".cross.w"),
                                          P(lvl("unet.d", l) + ".cross.b")));
            skips[static_cast<size_t>(l)] = h;
            if (l + 1 < ModelConfig::kLevels) h = ad::avgpool2d(h, 2, cfg.halves_time(l) ? 2 : 1);
        }
        for (int l = ModelConfig::kLevels - 1; l >= 0; --l) {
            const int64_t cl = cfg.level_channels(l);
            if (l + 1 < ModelConfig::kLevels) h = ad::upsample2d(h, 2, cfg.halves_time(l) ? 2 : 1);
            const int64_t cin = l == ModelConfig::kLevels - 1 ? cl : cfg.level_channels(l + 1);
            h = res2d(h, lvl("unet.u", l) + ".b0", cin, cl, &cond);
            h = ad::add(h, skips[static_cast<size_t>(l)]);
            h = ad::add(h, ad::conv2d(y[static_cast<size_t>(l)], P(lvl("unet.u", l) + ".cross.w"),
                                      P(lvl("unet.u", l) + ".cross.b")));
            for (int b = 1; b < cfg.res_blocks_unet; ++b)
                h = res2d(h, lvl("unet.u", l) + ".b" + std::to_string(b), cl, cl, &cond);
            if (cfg.attn_levels.count(l)) h = attn_block(h, lvl("unet.u", l) + ".attn", cl);
        }
        h = ad::groupnorm(h, P("unet.out.gn.g"), P("unet.out.gn.b"), ModelConfig::groups_for(cfg.level_channels(0)),
                          ModelConfig::kGroupNormEps);
        h = ad::swish(h);
        return ad::conv2d(h, P("unet.out.w"), P("unet.out.b"));
    }

    // F~_theta: c_in scaling and adaptive input scaling on the way in,
    // adaptive output scaling on the way out
    V unet_forward(V x_sigma, const std::vector<double>& sigmas, const std::vector<V>& y,
                   const ScheduleConfig& sched) const {
        const auto& s = x_sigma.val().shape;
        require_shape(s.size() == 4 && s[1] == 2 && s[2] == cfg.freq_bins, "unet_forward: bad input shape");
        require_shape(static_cast<int64_t>(sigmas.size()) == s[0], "unet_forward: one sigma per sample");
        require_shape(static_cast<int64_t>(y.size()) == ModelConfig::kLevels,
                      "unet_forward: expected one decoder feature per level");
        std::vector<Real> c_in(sigmas.size());
        for (size_t i = 0; i < sigmas.size(); ++i)
            c_in[i] = static_cast<Real>(consistency_scalings(sigmas[i], sched).c_in);
        V xin = ad::mul_freq_scale(x_sigma, freq_scale(sigmas, "scale_in"));
        xin = ad::mul_per_sample(xin, c_in);
        V out = unet_trunk(xin, noise_cond(sigmas), y);
        return ad::mul_freq_scale(out, freq_scale(sigmas, "scale_out"));
    }

    // f_theta(x_sigma, sigma, y) = c_skip x_sigma + c_out F~_theta(...)
    V consistency(V x_sigma, const std::vector<double>& sigmas, const std::vector<V>& y,
                  const ScheduleConfig& sched) const {
        std::vector<Real> c_skip(sigmas.size()), c_out(sigmas.size());
        for (size_t i = 0; i < sigmas.size(); ++i) {
            const Scalings sc = consistency_scalings(sigmas[i], sched);
            c_skip[i] = static_cast<Real>(sc.c_skip);
            c_out[i] = static_cast<Real>(sc.c_out);
        }
        V ft = unet_forward(x_sigma, sigmas, y, sched);
        return ad::add(ad::mul_per_sample(x_sigma, c_skip), ad::mul_per_sample(ft, c_out));
    }
};

}  // namespace lac
