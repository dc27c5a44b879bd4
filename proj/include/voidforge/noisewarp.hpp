#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "voidforge/render.hpp"

namespace voidforge {

// Flow-warped Gaussian noise. Frame 0 is i.i.d. standard normal; each later
// frame forward-splats the previous one along the (downsampled) flow with
// sum/sqrt(n) aggregation, so per-pixel marginals stay standard normal.
struct NoiseVolume {
    int frames = 0;
    int width = 0;
    int height = 0;
    int channels = 0;
    std::uint64_t seed = 0;
    int flow_downsample = 1;
    std::vector<float> data;  // [t][y][x][c] row-major

    std::size_t index(int t, int x, int y, int c) const {
        return ((static_cast<std::size_t>(t) * height + y) * width + x) * channels + c;
    }
    std::span<const float> frame(int t) const {
        const std::size_t n = static_cast<std::size_t>(width) * height * channels;
        return {data.data() + n * t, n};
    }
};

// i.i.d. standard normal frame keyed by (seed, frame=0, pixel, channel)
std::vector<float> sample_base_noise(std::uint64_t seed, int width, int height, int channels);

// average-pool uv over kxk blocks then divide by k; valid iff the whole
// block is valid
FlowField downsample_flow(const FlowField& flow, int k);

// one forward-splat warp step; fresh fill is keyed by (seed, t, pixel, channel)
std::vector<float> warp_noise(std::span<const float> prev, const FlowField& flow, int width,
                              int height, int channels, std::uint64_t seed, int t);

// chain warps over a full clip: T-1 render-resolution flows for T frames.
// render_width/render_height name the flow resolution; the volume itself is
// k times smaller. An empty flow list yields the single base-noise frame.
NoiseVolume warp_volume(std::span<const FlowField> flows, std::uint64_t seed, int render_width,
                        int render_height, int channels, int k);

}  // namespace voidforge
