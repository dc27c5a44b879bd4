#pragma once

#include <optional>
#include <vector>

#include "voidforge/physics.hpp"
#include "voidforge/scene.hpp"
#include "voidforge/vec3.hpp"

namespace voidforge {

struct CameraPose {
    Vec3 eye;
    Vec3 look_at;
    Vec3 up{0.0, 1.0, 0.0};
    double focal = 150.0;  // pixels
    int width = 128;
    int height = 128;
};

// One rendered frame. rgb/instance/depth/shadow are per-pixel, row-major.
// hit_offset holds body-local hit coordinates where instance > 0; for ground
// hits (instance == 0, finite depth) it holds the world-space point so flow
// can track static geometry.
struct FramePacket {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;           // w*h*3, values in [0, 1]
    std::vector<int> instance;        // 0 = background/ground, else body id
    std::vector<float> depth;         // meters along the ray; +inf for miss
    std::vector<std::uint8_t> shadow; // 1 where the visible point is shadowed
    std::vector<Vec3> hit_offset;

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;  // pixel displacement, frame t -> t+1
    std::vector<float> v;
    std::vector<std::uint8_t> valid;

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

inline constexpr double kShadowAttenuation = 0.4;
inline constexpr Vec3 kBackgroundColor{0.72, 0.80, 0.92};

// Linear interpolation of the trajectory endpoints; Orbit places the eye on
// the interpolated circle about center, Dolly translates along the initial
// view axis.
CameraPose camera_at(const CameraTrajectorySpec& traj, double t_frac, int width, int height);
CameraPose camera_for_frame(const SceneSpec& spec, int frame);

// Projection helpers (pixel centers at integer + 0.5).
struct CameraBasis {
    Vec3 forward, right, up;
};
CameraBasis camera_basis(const CameraPose& cam);
Vec3 pixel_ray_dir(const CameraPose& cam, const CameraBasis& basis, double px, double py);
struct ProjectedPoint {
    double px, py;
    double depth;  // along the forward axis
};
std::optional<ProjectedPoint> project_point(const CameraPose& cam, const CameraBasis& basis,
                                            const Vec3& point);

FramePacket render_frame(const std::vector<BodyState>& states, const SceneSpec& spec,
                         const CameraPose& cam, bool exclude_removed = false);

FlowField ground_truth_flow(const FramePacket& packet_t, const std::vector<BodyState>& states_t,
                            const std::vector<BodyState>& states_t1, const CameraPose& cam_t,
                            const CameraPose& cam_t1, const SceneSpec& spec);

struct RenderedClip {
    std::vector<FramePacket> packets;  // size T
    std::vector<FlowField> flows;      // size T-1
};
struct PairRenders {
    RenderedClip factual;
    RenderedClip counterfactual;
};

RenderedClip render_clip(const Trajectory& traj, const SceneSpec& spec);
PairRenders render_pair(const CounterfactualPair& pair, const SceneSpec& spec);

}  // namespace voidforge
