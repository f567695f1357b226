#pragma once

#include <array>
#include <cstdint>
#include <set>

#include "lac/errors.hpp"

namespace lac {

// Geometry of the encoder, decoder and consistency UNet. Five resolution
// levels; every transition halves frequency and the transitions listed in
// time_downsample_levels also halve time (three by default, so eight
// spectrogram frames collapse into one latent vector).
struct ModelConfig {
    int64_t d_lat = 64;
    int64_t base_channels = 64;
    std::array<int64_t, 5> channel_mults = {1, 2, 4, 4, 4};
    int64_t res_blocks_unet = 2;
    int64_t res_blocks_enc_dec = 1;
    int64_t res_blocks_1d = 4;
    std::set<int> attn_levels = {2, 3, 4};
    int64_t attn_heads = 4;
    int64_t embed_channels = 256;
    int64_t channels_1d = 512;
    int64_t freq_bins = 1024;
    int64_t time_frames = 64;
    std::set<int> time_downsample_levels = {1, 2, 3};  // transition indices in 0..3
    // Feed decoder features to the UNet downsampling branch as well
    // (alternative reading of the cross-connection placement).
    bool cross_to_down_branch = false;

    static constexpr int kLevels = 5;
    static constexpr double kGroupNormEps = 1e-6;

    int64_t level_channels(int l) const { return base_channels * channel_mults[static_cast<size_t>(l)]; }
    int64_t level_freq(int l) const { return freq_bins >> l; }

    int time_halvings_before(int l) const {
        int n = 0;
        for (int t : time_downsample_levels)
            if (t < l) ++n;
        return n;
    }
    int64_t level_time(int l) const { return time_frames >> time_halvings_before(l); }
    bool halves_time(int transition) const { return time_downsample_levels.count(transition) > 0; }

    int64_t frames_per_latent() const { return int64_t(1) << time_downsample_levels.size(); }
    int64_t latent_frames() const { return time_frames / frames_per_latent(); }
    int64_t flat_channels() const { return level_channels(kLevels - 1) * level_freq(kLevels - 1); }

    static int64_t groups_for(int64_t channels) { return channels < 32 ? channels : 32; }

    void validate() const {
        require_config(d_lat >= 1, "model: d_lat must be >= 1");
        require_config(base_channels >= 1, "model: base_channels must be >= 1");
        for (int64_t m : channel_mults) require_config(m >= 1, "model: channel multipliers must be >= 1");
        require_config(res_blocks_unet >= 1 && res_blocks_enc_dec >= 1 && res_blocks_1d >= 1,
                       "model: block counts must be >= 1");
        require_config(freq_bins % (1 << (kLevels - 1)) == 0 && level_freq(kLevels - 1) >= 1,
                       "model: freq_bins must support 4 halvings");
        for (int t : time_downsample_levels)
            require_config(t >= 0 && t < kLevels - 1, "model: time downsample transitions must be in 0..3");
        require_config(time_frames % frames_per_latent() == 0 && latent_frames() >= 1,
                       "model: time_frames must be divisible by the time halvings");
        require_config(embed_channels >= 4 && embed_channels % 2 == 0, "model: embed_channels must be even and >= 4");
        require_config(channels_1d >= 1, "model: channels_1d must be >= 1");
        for (int l : attn_levels) {
            require_config(l >= 0 && l < kLevels, "model: attention level out of range");
            require_config(level_freq(l) <= 256, "model: attention only at levels with frequency extent <= 256");
            require_config(level_channels(l) % attn_heads == 0, "model: attention channels not divisible by heads");
        }
        for (int l = 0; l < kLevels; ++l)
            require_config(level_channels(l) % groups_for(level_channels(l)) == 0,
                           "model: level channels not divisible by group count");
        require_config(channels_1d % groups_for(channels_1d) == 0, "model: channels_1d not divisible by group count");
    }

    static ModelConfig toy() {
        ModelConfig m;
        m.d_lat = 8;
        m.base_channels = 16;
        m.channel_mults = {1, 2, 2, 2, 2};
        m.res_blocks_unet = 1;
        m.res_blocks_enc_dec = 1;
        m.res_blocks_1d = 4;
        m.attn_heads = 4;
        m.embed_channels = 64;
        m.channels_1d = 32;
        m.freq_bins = 64;
        m.time_frames = 16;
        return m;
    }
};

}  // namespace lac
