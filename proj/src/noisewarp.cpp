#include "voidforge/noisewarp.hpp"

#include <cmath>

#include "voidforge/errors.hpp"
#include "voidforge/rng.hpp"

namespace voidforge {

std::vector<float> sample_base_noise(std::uint64_t seed, int width, int height, int channels) {
    if (width <= 0 || height <= 0 || channels <= 0)
        throw RangeError("sample_base_noise: dimensions must be positive");
    std::vector<float> frame(static_cast<std::size_t>(width) * height * channels);
    std::size_t i = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c)
                frame[i++] = static_cast<float>(
                    counter_normal(seed, 0, static_cast<std::uint64_t>(y) * width + x, c));
    return frame;
}

FlowField downsample_flow(const FlowField& flow, int k) {
    if (k < 1) throw RangeError("downsample_flow: k must be >= 1");
    if (flow.width % k != 0 || flow.height % k != 0)
        throw IndivisibleResolution("downsample_flow: k=" + std::to_string(k) +
                                    " does not divide " + std::to_string(flow.width) + "x" +
                                    std::to_string(flow.height));
    if (k == 1) return flow;

    FlowField out;
    out.width = flow.width / k;
    out.height = flow.height / k;
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
    out.u.assign(n, 0.0f);
    out.v.assign(n, 0.0f);
    out.valid.assign(n, 0);

    for (int cy = 0; cy < out.height; ++cy)
        for (int cx = 0; cx < out.width; ++cx) {
            double su = 0.0, sv = 0.0;
            bool all_valid = true;
            for (int dy = 0; dy < k; ++dy)
                for (int dx = 0; dx < k; ++dx) {
                    const std::size_t i = flow.index(cx * k + dx, cy * k + dy);
                    su += flow.u[i];
                    sv += flow.v[i];
                    all_valid = all_valid && flow.valid[i] != 0;
                }
            const std::size_t o = out.index(cx, cy);
            const double scale = 1.0 / (static_cast<double>(k) * k * k);  // mean, then /k
            out.u[o] = static_cast<float>(su * scale);
            out.v[o] = static_cast<float>(sv * scale);
            out.valid[o] = all_valid ? 1 : 0;
        }
    return out;
}

std::vector<float> warp_noise(std::span<const float> prev, const FlowField& flow, int width,
                              int height, int channels, std::uint64_t seed, int t) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (flow.width != width || flow.height != height || prev.size() != n * channels)
        throw ShapeMismatch("warp_noise: flow/noise resolution mismatch");

    std::vector<double> sum(n * channels, 0.0);
    std::vector<std::uint32_t> count(n, 0);

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::size_t i = flow.index(x, y);
            if (!flow.valid[i]) continue;
            const long dx = std::lround(static_cast<double>(x) + flow.u[i]);
            const long dy = std::lround(static_cast<double>(y) + flow.v[i]);
            if (dx < 0 || dx >= width || dy < 0 || dy >= height) continue;
            const std::size_t dest = static_cast<std::size_t>(dy) * width + dx;
            count[dest] += 1;
            for (int c = 0; c < channels; ++c)
                sum[dest * channels + c] += prev[i * channels + c];
        }

    std::vector<float> out(n * channels);
    for (std::size_t p = 0; p < n; ++p) {
        if (count[p] == 0) {
            // disocclusion: fresh noise keyed by the destination pixel
            for (int c = 0; c < channels; ++c)
                out[p * channels + c] = static_cast<float>(counter_normal(seed, t, p, c));
        } else if (count[p] == 1) {
            for (int c = 0; c < channels; ++c)
                out[p * channels + c] = static_cast<float>(sum[p * channels + c]);
        } else {
            const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(count[p]));
            for (int c = 0; c < channels; ++c)
                out[p * channels + c] = static_cast<float>(sum[p * channels + c] * inv_sqrt);
        }
    }
    return out;
}

NoiseVolume warp_volume(std::span<const FlowField> flows, std::uint64_t seed, int render_width,
                        int render_height, int channels, int k) {
    if (k < 1) throw RangeError("warp_volume: k must be >= 1");
    if (render_width % k != 0 || render_height % k != 0)
        throw IndivisibleResolution("warp_volume: k does not divide the render resolution");
    for (const FlowField& f : flows)
        if (f.width != render_width || f.height != render_height)
            throw ShapeMismatch("warp_volume: flow resolution mismatch");
    const int width = render_width / k;
    const int height = render_height / k;

    NoiseVolume volume;
    volume.frames = static_cast<int>(flows.size()) + 1;
    volume.width = width;
    volume.height = height;
    volume.channels = channels;
    volume.seed = seed;
    volume.flow_downsample = k;
    volume.data.reserve(static_cast<std::size_t>(volume.frames) * width * height * channels);

    std::vector<float> frame = sample_base_noise(seed, width, height, channels);
    volume.data.insert(volume.data.end(), frame.begin(), frame.end());
    for (std::size_t t = 0; t < flows.size(); ++t) {
        const FlowField coarse = downsample_flow(flows[t], k);
        frame = warp_noise(frame, coarse, width, height, channels, seed, static_cast<int>(t) + 1);
        volume.data.insert(volume.data.end(), frame.begin(), frame.end());
    }
    return volume;
}

}  // namespace voidforge
