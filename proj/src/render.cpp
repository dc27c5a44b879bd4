#include "voidforge/render.hpp"

#include <cmath>
#include <limits>

#include "voidforge/errors.hpp"

namespace voidforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kShadowBias = 1e-6;

double lerp(double a, double b, double t) { return a + (b - a) * t; }

// nearest positive ray parameter for |o + t d - c| = r
std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
    const Vec3 oc = o - c;
    const double b = dot(oc, d);
    const double disc = b * b - (oc.norm2() - r * r);
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    double t = -b - s;
    if (t < 0.0) t = -b + s;
    if (t < 0.0) return std::nullopt;
    return t;
}

// slab test; returns entry t and face normal
struct BoxHit {
    double t;
    Vec3 normal;
};
std::optional<BoxHit> ray_box(const Vec3& o, const Vec3& d, const Vec3& c, const Vec3& h) {
    double tmin = -kInf, tmax = kInf;
    Vec3 nmin;
    const double oa[3] = {o.x - c.x, o.y - c.y, o.z - c.z};
    const double da[3] = {d.x, d.y, d.z};
    const double ha[3] = {h.x, h.y, h.z};
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 axis_n{axis == 0 ? 1.0 : 0.0, axis == 1 ? 1.0 : 0.0, axis == 2 ? 1.0 : 0.0};
        if (da[axis] == 0.0) {
            if (std::fabs(oa[axis]) > ha[axis]) return std::nullopt;
            continue;
        }
        double t1 = (-ha[axis] - oa[axis]) / da[axis];
        double t2 = (ha[axis] - oa[axis]) / da[axis];
        Vec3 n1 = axis_n * (da[axis] > 0.0 ? -1.0 : 1.0);
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > tmin) {
            tmin = t1;
            nmin = n1;
        }
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return std::nullopt;
    }
    if (tmax < 0.0) return std::nullopt;
    if (tmin < 0.0) return std::nullopt;  // origin inside: treat as miss (cameras stay outside)
    return BoxHit{tmin, nmin};
}

struct SceneHit {
    double t = kInf;
    int body_index = -1;  // -1 = ground
    Vec3 normal;
};

std::optional<SceneHit> trace_nearest(const Vec3& o, const Vec3& d,
                                      const std::vector<BodyState>& states, const SceneSpec& spec,
                                      bool exclude_removed) {
    SceneHit best;
    bool found = false;

    if (d.y < 0.0 && o.y > 0.0) {
        best.t = -o.y / d.y;
        best.body_index = -1;
        best.normal = {0.0, 1.0, 0.0};
        found = true;
    }

    for (std::size_t i = 0; i < states.size(); ++i) {
        const BodyState& s = states[i];
        if (!s.alive) continue;
        const BodySpec& b = spec.bodies[i];
        if (exclude_removed && spec.is_removal_target(b.id)) continue;
        if (b.shape == ShapeKind::Sphere) {
            const auto t = ray_sphere(o, d, s.position, b.radius);
            if (t && *t < best.t) {
                best.t = *t;
                best.body_index = static_cast<int>(i);
                best.normal = (o + d * *t - s.position).normalized();
                found = true;
            }
        } else {
            const auto hit = ray_box(o, d, s.position, b.half_extents);
            if (hit && hit->t < best.t) {
                best.t = hit->t;
                best.body_index = static_cast<int>(i);
                best.normal = hit->normal;
                found = true;
            }
        }
    }
    if (!found) return std::nullopt;
    return best;
}

bool occluded_toward_light(const Vec3& point, const std::vector<BodyState>& states,
                           const SceneSpec& spec, bool exclude_removed) {
    const Vec3 o = point + spec.light_dir * kShadowBias;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const BodyState& s = states[i];
        if (!s.alive) continue;
        const BodySpec& b = spec.bodies[i];
        if (exclude_removed && spec.is_removal_target(b.id)) continue;
        if (b.shape == ShapeKind::Sphere) {
            if (ray_sphere(o, spec.light_dir, s.position, b.radius)) return true;
        } else {
            if (ray_box(o, spec.light_dir, s.position, b.half_extents)) return true;
        }
    }
    return false;
}

}  // namespace

CameraPose camera_at(const CameraTrajectorySpec& traj, double t_frac, int width, int height) {
    const double radius = lerp(traj.radius0, traj.radius1, t_frac);
    const double height_m = lerp(traj.height0, traj.height1, t_frac);
    const double angle = lerp(traj.angle0, traj.angle1, t_frac);

    CameraPose cam;
    cam.width = width;
    cam.height = height;
    cam.focal = lerp(traj.focal0, traj.focal1, t_frac);
    cam.look_at = traj.center;
    cam.up = {0.0, 1.0, 0.0};

    if (traj.mode == CameraTrajectorySpec::Mode::Orbit) {
        cam.eye = traj.center +
                  Vec3{radius * std::cos(angle), height_m, radius * std::sin(angle)};
    } else {
        const Vec3 dir{std::cos(traj.angle0), 0.0, std::sin(traj.angle0)};
        cam.eye = traj.center + dir * radius + Vec3{0.0, height_m, 0.0};
    }
    return cam;
}

CameraPose camera_for_frame(const SceneSpec& spec, int frame) {
    const double t_frac = spec.frames > 1 ? static_cast<double>(frame) / (spec.frames - 1) : 0.0;
    return camera_at(spec.camera, t_frac, spec.width, spec.height);
}

CameraBasis camera_basis(const CameraPose& cam) {
    CameraBasis b;
    b.forward = (cam.look_at - cam.eye).normalized();
    b.right = cross(b.forward, cam.up).normalized();
    b.up = cross(b.right, b.forward);
    return b;
}

Vec3 pixel_ray_dir(const CameraPose& cam, const CameraBasis& basis, double px, double py) {
    const double dx = px - cam.width * 0.5;
    const double dy = cam.height * 0.5 - py;
    return (basis.forward * cam.focal + basis.right * dx + basis.up * dy).normalized();
}

std::optional<ProjectedPoint> project_point(const CameraPose& cam, const CameraBasis& basis,
                                            const Vec3& point) {
    const Vec3 d = point - cam.eye;
    const double zf = dot(d, basis.forward);
    if (zf <= 0.0) return std::nullopt;
    return ProjectedPoint{cam.width * 0.5 + cam.focal * dot(d, basis.right) / zf,
                          cam.height * 0.5 - cam.focal * dot(d, basis.up) / zf, zf};
}

FramePacket render_frame(const std::vector<BodyState>& states, const SceneSpec& spec,
                         const CameraPose& cam, bool exclude_removed) {
    if (states.size() != spec.bodies.size())
        throw ShapeMismatch("render_frame: states do not match spec bodies");

    const int w = cam.width, h = cam.height;
    FramePacket packet;
    packet.width = w;
    packet.height = h;
    packet.rgb.assign(static_cast<std::size_t>(w) * h * 3, 0.0f);
    packet.instance.assign(static_cast<std::size_t>(w) * h, 0);
    packet.depth.assign(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity());
    packet.shadow.assign(static_cast<std::size_t>(w) * h, 0);
    packet.hit_offset.assign(static_cast<std::size_t>(w) * h, Vec3{});

    const CameraBasis basis = camera_basis(cam);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = packet.index(x, y);
            const Vec3 dir = pixel_ray_dir(cam, basis, x + 0.5, y + 0.5);
            const auto hit = trace_nearest(cam.eye, dir, states, spec, exclude_removed);
            if (!hit) {
                packet.rgb[idx * 3 + 0] = static_cast<float>(kBackgroundColor.x);
                packet.rgb[idx * 3 + 1] = static_cast<float>(kBackgroundColor.y);
                packet.rgb[idx * 3 + 2] = static_cast<float>(kBackgroundColor.z);
                continue;
            }
            const Vec3 point = cam.eye + dir * hit->t;
            const bool shadowed = occluded_toward_light(point, states, spec, exclude_removed);

            Vec3 albedo;
            if (hit->body_index < 0) {
                albedo = spec.ground_albedo;
                packet.instance[idx] = 0;
                packet.hit_offset[idx] = point;  // static world point
            } else {
                const BodySpec& b = spec.bodies[hit->body_index];
                albedo = b.albedo;
                packet.instance[idx] = b.id;
                packet.hit_offset[idx] = point - states[hit->body_index].position;
            }

            const double lambert = std::max(0.0, dot(hit->normal, spec.light_dir));
            const double atten = shadowed ? kShadowAttenuation : 1.0;
            packet.depth[idx] = static_cast<float>(hit->t);
            packet.shadow[idx] = shadowed ? 1 : 0;
            packet.rgb[idx * 3 + 0] = static_cast<float>(albedo.x * lambert * atten);
            packet.rgb[idx * 3 + 1] = static_cast<float>(albedo.y * lambert * atten);
            packet.rgb[idx * 3 + 2] = static_cast<float>(albedo.z * lambert * atten);
        }
    }
    return packet;
}

FlowField ground_truth_flow(const FramePacket& packet_t, const std::vector<BodyState>& states_t,
                            const std::vector<BodyState>& states_t1, const CameraPose& cam_t,
                            const CameraPose& cam_t1, const SceneSpec& spec) {
    if (states_t.size() != states_t1.size() || states_t.size() != spec.bodies.size())
        throw ShapeMismatch("ground_truth_flow: state arrays do not match spec");
    if (packet_t.width != cam_t.width || packet_t.height != cam_t.height)
        throw ShapeMismatch("ground_truth_flow: packet does not match camera resolution");

    const int w = packet_t.width, h = packet_t.height;
    FlowField flow;
    flow.width = w;
    flow.height = h;
    flow.u.assign(static_cast<std::size_t>(w) * h, 0.0f);
    flow.v.assign(static_cast<std::size_t>(w) * h, 0.0f);
    flow.valid.assign(static_cast<std::size_t>(w) * h, 0);

    const CameraBasis basis_t1 = camera_basis(cam_t1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = packet_t.index(x, y);
            if (!std::isfinite(packet_t.depth[idx])) continue;  // sky

            Vec3 point_t1;
            const int id = packet_t.instance[idx];
            if (id == 0) {
                point_t1 = packet_t.hit_offset[idx];  // static geometry keeps its world point
            } else {
                int body_index = -1;
                for (std::size_t i = 0; i < spec.bodies.size(); ++i)
                    if (spec.bodies[i].id == id) body_index = static_cast<int>(i);
                if (body_index < 0) throw ShapeMismatch("ground_truth_flow: unknown instance id");
                if (!states_t1[body_index].alive) continue;  // dead at t+1
                point_t1 = states_t1[body_index].position + packet_t.hit_offset[idx];
            }

            const auto proj = project_point(cam_t1, basis_t1, point_t1);
            if (!proj) continue;
            if (proj->px < 0.0 || proj->px >= w || proj->py < 0.0 || proj->py >= h) continue;
            flow.u[idx] = static_cast<float>(proj->px - (x + 0.5));
            flow.v[idx] = static_cast<float>(proj->py - (y + 0.5));
            flow.valid[idx] = 1;
        }
    }
    return flow;
}

RenderedClip render_clip(const Trajectory& traj, const SceneSpec& spec) {
    RenderedClip clip;
    clip.packets.reserve(traj.frames);
    std::vector<CameraPose> cams;
    cams.reserve(traj.frames);
    for (int t = 0; t < traj.frames; ++t) {
        cams.push_back(camera_for_frame(spec, t));
        clip.packets.push_back(render_frame(traj.states[t], spec, cams.back()));
    }
    clip.flows.reserve(traj.frames > 0 ? traj.frames - 1 : 0);
    for (int t = 0; t + 1 < traj.frames; ++t)
        clip.flows.push_back(ground_truth_flow(clip.packets[t], traj.states[t], traj.states[t + 1],
                                               cams[t], cams[t + 1], spec));
    return clip;
}

PairRenders render_pair(const CounterfactualPair& pair, const SceneSpec& spec) {
    PairRenders renders;
    renders.factual = render_clip(pair.factual, spec);
    renders.counterfactual = render_clip(pair.counterfactual, spec);
    return renders;
}

}  // namespace voidforge
