#include "voidforge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "voidforge/errors.hpp"
#include "voidforge/rng.hpp"

namespace voidforge {

namespace {

Vec3 hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const double m = v - c;
    return {r + m, g + m, b + m};
}

double sphere_box_gap(const Vec3& c, double r, const Vec3& bc, const Vec3& h) {
    const Vec3 d = c - bc;
    const Vec3 q{std::clamp(d.x, -h.x, h.x), std::clamp(d.y, -h.y, h.y),
                 std::clamp(d.z, -h.z, h.z)};
    const Vec3 delta = d - q;
    const double dist = delta.norm();
    if (dist > 0.0) return dist - r;
    // center inside the box: negative gap through the nearest face
    const double fx = h.x - std::fabs(d.x);
    const double fy = h.y - std::fabs(d.y);
    const double fz = h.z - std::fabs(d.z);
    return -(std::min(fx, std::min(fy, fz)) + r);
}

struct BuildContext {
    SplitMix64 rng;
    const SamplerParams& params;
    std::vector<BodySpec> bodies;
    int next_id = 1;
    Vec3 axis;        // horizontal action axis
    Vec3 origin;      // action anchor on the ground plane
    double corridor_half_width = 0.45;

    explicit BuildContext(std::uint64_t seed, const SamplerParams& p)
        : rng(seed), params(p) {}

    BodySpec base_body(ShapeKind shape) {
        BodySpec b;
        b.id = next_id++;
        b.shape = shape;
        if (shape == ShapeKind::Sphere) {
            b.radius = rng.uniform(params.min_radius, params.max_radius);
        } else {
            b.half_extents = {rng.uniform(params.min_half_extent, params.max_half_extent),
                              rng.uniform(params.min_half_extent, params.max_half_extent),
                              rng.uniform(params.min_half_extent, params.max_half_extent)};
        }
        b.mass = rng.uniform(0.3, 3.0);
        b.restitution = rng.uniform(0.3, 0.9);
        b.albedo = hsv_to_rgb(rng.next_double(), rng.uniform(0.55, 0.9), rng.uniform(0.55, 0.95));
        return b;
    }

    void rest_on_ground(BodySpec& b, const Vec3& xz) {
        b.position0 = {xz.x, b.support_height(), xz.z};
    }

    bool overlaps_existing(const BodySpec& cand) const {
        for (const auto& b : bodies)
            if (body_gap(cand, b) < 1e-3) return true;
        return false;
    }

    double corridor_distance(const Vec3& p) const {
        const Vec3 d = p - origin;
        const double along = dot(d, axis);
        const Vec3 lateral = d - axis * along;
        return lateral.norm();
    }
};

void add_fillers(BuildContext& ctx, int count) {
    for (int i = 0; i < count; ++i) {
        BodySpec b = ctx.base_body(ctx.rng.chance(0.5) ? ShapeKind::Sphere : ShapeKind::Box);
        bool placed = false;
        for (int attempt = 0; attempt < ctx.params.placement_retries; ++attempt) {
            const double ang = ctx.rng.uniform(0.0, 6.283185307179586);
            const double dist = ctx.rng.uniform(0.55, 1.15);
            const Vec3 xz{ctx.origin.x + dist * std::cos(ang), 0.0,
                          ctx.origin.z + dist * std::sin(ang)};
            ctx.rest_on_ground(b, xz);
            if (ctx.corridor_distance(b.position0) < ctx.corridor_half_width) continue;
            if (ctx.overlaps_existing(b)) continue;
            placed = true;
            break;
        }
        if (!placed)
            throw PlacementError("filler placement failed after " +
                                 std::to_string(ctx.params.placement_retries) + " retries");
        if (ctx.rng.chance(0.4)) {
            // drift slowly away from the action area
            const Vec3 radial = (b.position0 - ctx.origin);
            const Vec3 dir = Vec3{radial.x, 0.0, radial.z}.normalized();
            b.velocity0 = dir * ctx.rng.uniform(0.05, 0.4);
        }
        ctx.bodies.push_back(b);
    }
}

// mover -> target -> downstream receiver, all on one line; removing the
// middle body changes both the mover's path and the receiver's fate
std::vector<int> build_collision_chain(BuildContext& ctx) {
    BodySpec middle = ctx.base_body(ctx.rng.chance(0.5) ? ShapeKind::Sphere : ShapeKind::Box);
    ctx.rest_on_ground(middle, ctx.origin);

    BodySpec mover = ctx.base_body(ShapeKind::Sphere);
    const double reach = mover.radius + middle.characteristic_size();
    const double approach = reach + ctx.rng.uniform(0.35, 0.85);
    ctx.rest_on_ground(mover, ctx.origin - ctx.axis * approach);
    mover.velocity0 = ctx.axis * ctx.rng.uniform(1.2, 3.2);

    BodySpec receiver = ctx.base_body(ctx.rng.chance(0.5) ? ShapeKind::Sphere : ShapeKind::Box);
    const double spacing =
        middle.characteristic_size() + receiver.characteristic_size() + ctx.rng.uniform(0.25, 0.6);
    ctx.rest_on_ground(receiver, ctx.origin + ctx.axis * spacing);

    ctx.bodies.push_back(mover);
    ctx.bodies.push_back(middle);
    ctx.bodies.push_back(receiver);
    return {middle.id};
}

// stack of boxes; removing a support sends everything above into free fall
std::vector<int> build_support_removal(BuildContext& ctx) {
    const int levels = ctx.rng.chance(0.5) ? 2 : 3;
    constexpr double kRestGap = 1e-4;  // below the 1e-3 "rests atop" bound, above 1e-6 separation

    std::vector<BodySpec> stack;
    BodySpec bottom = ctx.base_body(ShapeKind::Box);
    bottom.half_extents.x = ctx.rng.uniform(0.10, 0.24);
    bottom.half_extents.z = ctx.rng.uniform(0.10, 0.24);
    bottom.restitution = ctx.rng.uniform(0.05, 0.35);
    ctx.rest_on_ground(bottom, ctx.origin);
    stack.push_back(bottom);

    for (int lvl = 1; lvl < levels; ++lvl) {
        const BodySpec& below = stack.back();
        BodySpec box = ctx.base_body(ShapeKind::Box);
        box.half_extents.x = below.half_extents.x * ctx.rng.uniform(0.6, 0.95);
        box.half_extents.z = below.half_extents.z * ctx.rng.uniform(0.6, 0.95);
        box.restitution = ctx.rng.uniform(0.05, 0.35);
        const double off_x = ctx.rng.uniform(-0.3, 0.3) * below.half_extents.x;
        const double off_z = ctx.rng.uniform(-0.3, 0.3) * below.half_extents.z;
        box.position0 = {below.position0.x + off_x,
                         below.position0.y + below.half_extents.y + box.half_extents.y + kRestGap,
                         below.position0.z + off_z};
        stack.push_back(box);
    }

    const int target_level = (levels == 3 && ctx.rng.chance(0.4)) ? 1 : 0;
    const int target_id = stack[target_level].id;
    for (auto& b : stack) ctx.bodies.push_back(b);
    return {target_id};
}

// mover aimed at an obstacle with a bystander behind it; removing the
// obstacle lets the mover through to strike the bystander
std::vector<int> build_obstruction_removal(BuildContext& ctx) {
    BodySpec obstacle = ctx.base_body(ShapeKind::Box);
    obstacle.half_extents.x = ctx.rng.uniform(0.12, 0.28);
    obstacle.half_extents.y = ctx.rng.uniform(0.12, 0.28);
    obstacle.mass = ctx.rng.uniform(3.0, 8.0);
    ctx.rest_on_ground(obstacle, ctx.origin);

    BodySpec mover = ctx.base_body(ShapeKind::Sphere);
    const double approach =
        mover.radius + obstacle.characteristic_size() + ctx.rng.uniform(0.4, 0.9);
    ctx.rest_on_ground(mover, ctx.origin - ctx.axis * approach);
    mover.velocity0 = ctx.axis * ctx.rng.uniform(1.5, 3.4);

    BodySpec bystander = ctx.base_body(ctx.rng.chance(0.5) ? ShapeKind::Sphere : ShapeKind::Box);
    const double spacing = obstacle.characteristic_size() + bystander.characteristic_size() +
                           ctx.rng.uniform(0.3, 0.7);
    ctx.rest_on_ground(bystander, ctx.origin + ctx.axis * spacing);

    ctx.bodies.push_back(mover);
    ctx.bodies.push_back(obstacle);
    ctx.bodies.push_back(bystander);
    return {obstacle.id};
}

CameraTrajectorySpec sample_camera(SplitMix64& rng, const Vec3& action_mid, int width) {
    CameraTrajectorySpec cam;
    cam.mode = rng.chance(0.5) ? CameraTrajectorySpec::Mode::Orbit
                               : CameraTrajectorySpec::Mode::Dolly;
    cam.center = {action_mid.x * 0.7 + rng.uniform(-0.1, 0.1), rng.uniform(0.12, 0.35),
                  action_mid.z * 0.7 + rng.uniform(-0.1, 0.1)};
    cam.radius0 = rng.uniform(2.3, 3.5);
    cam.height0 = rng.uniform(0.9, 2.1);
    cam.angle0 = rng.uniform(0.0, 6.283185307179586);
    if (cam.mode == CameraTrajectorySpec::Mode::Orbit) {
        cam.radius1 = cam.radius0 * rng.uniform(0.92, 1.08);
        const double sweep = rng.uniform(0.2, 0.85) * (rng.chance(0.5) ? 1.0 : -1.0);
        cam.angle1 = cam.angle0 + sweep;
        cam.height1 = cam.height0 * rng.uniform(0.8, 1.2);
    } else {
        cam.radius1 = cam.radius0 + (rng.chance(0.6) ? -1.0 : 1.0) * rng.uniform(0.4, 1.0);
        cam.angle1 = cam.angle0;
        cam.height1 = cam.height0 * rng.uniform(0.9, 1.1);
    }
    cam.focal0 = width * rng.uniform(1.0, 1.5);
    cam.focal1 = cam.focal0 * rng.uniform(0.85, 1.25);
    return cam;
}

}  // namespace

double body_gap(const BodySpec& a, const BodySpec& b) {
    if (a.shape == ShapeKind::Sphere && b.shape == ShapeKind::Sphere)
        return (a.position0 - b.position0).norm() - (a.radius + b.radius);
    if (a.shape == ShapeKind::Sphere && b.shape == ShapeKind::Box)
        return sphere_box_gap(a.position0, a.radius, b.position0, b.half_extents);
    if (a.shape == ShapeKind::Box && b.shape == ShapeKind::Sphere)
        return sphere_box_gap(b.position0, b.radius, a.position0, a.half_extents);
    const Vec3 d = a.position0 - b.position0;
    const double gx = std::fabs(d.x) - (a.half_extents.x + b.half_extents.x);
    const double gy = std::fabs(d.y) - (a.half_extents.y + b.half_extents.y);
    const double gz = std::fabs(d.z) - (a.half_extents.z + b.half_extents.z);
    return std::max(gx, std::max(gy, gz));
}

SceneSpec sample_scene(std::uint64_t master_seed, std::uint64_t scene_index,
                       const SamplerParams& params) {
    if (params.min_bodies < 3 || params.max_bodies > 8 || params.min_bodies > params.max_bodies)
        throw RangeError("sampler body count must lie in [3, 8]");
    if (params.width < 32 || params.height < 32)
        throw RangeError("sampler resolution must be at least 32x32");
    if (params.min_radius <= 0 || params.min_half_extent <= 0 || params.max_speed <= 0 ||
        params.frames < 2 || params.substeps < 1 || params.fps <= 0)
        throw RangeError("sampler parameter out of range");
    const double weight_sum =
        params.template_weights[0] + params.template_weights[1] + params.template_weights[2];
    if (weight_sum <= 0 || params.template_weights[0] < 0 || params.template_weights[1] < 0 ||
        params.template_weights[2] < 0)
        throw RangeError("template weights must be non-negative with positive sum");

    const std::uint64_t scene_seed = mix64(master_seed, scene_index);
    BuildContext ctx(scene_seed, params);

    const double phi = ctx.rng.uniform(0.0, 6.283185307179586);
    ctx.axis = {std::cos(phi), 0.0, std::sin(phi)};
    ctx.origin = {ctx.rng.uniform(-0.15, 0.15), 0.0, ctx.rng.uniform(-0.15, 0.15)};

    const double pick = ctx.rng.next_double() * weight_sum;
    int template_index = 0;
    if (pick >= params.template_weights[0]) template_index = 1;
    if (pick >= params.template_weights[0] + params.template_weights[1]) template_index = 2;

    std::vector<int> targets;
    switch (template_index) {
        case 0: targets = build_collision_chain(ctx); break;
        case 1: targets = build_support_removal(ctx); break;
        default: targets = build_obstruction_removal(ctx); break;
    }

    const int body_count = ctx.rng.uniform_int(params.min_bodies, params.max_bodies);
    const int fillers = std::max(0, body_count - static_cast<int>(ctx.bodies.size()));
    add_fillers(ctx, fillers);

    // occasionally also remove a bystander filler: gives the dataset pure
    // object+shadow removal cases alongside the causal ones
    int dynamic_count = 0;
    for (const auto& b : ctx.bodies)
        if (b.dynamic()) ++dynamic_count;
    const int max_targets = (dynamic_count + 1) / 2;
    if (static_cast<int>(targets.size()) < max_targets && fillers > 0 && ctx.rng.chance(0.25)) {
        const auto& filler = ctx.bodies[ctx.bodies.size() - 1 - ctx.rng.next_below(fillers)];
        if (filler.dynamic() && std::find(targets.begin(), targets.end(), filler.id) == targets.end())
            targets.push_back(filler.id);
    }
    std::sort(targets.begin(), targets.end());

    // clamp mover speeds to the declared bound
    for (auto& b : ctx.bodies) {
        const double speed = b.velocity0.norm();
        if (speed > params.max_speed) b.velocity0 *= params.max_speed / speed;
    }

    SceneSpec spec;
    spec.scene_seed = scene_seed;
    spec.template_name = kTemplateNames[template_index];
    spec.bodies = std::move(ctx.bodies);
    spec.removal_targets = std::move(targets);
    spec.frames = params.frames;
    spec.fps = params.fps;
    spec.substeps = params.substeps;
    spec.width = params.width;
    spec.height = params.height;

    Vec3 action_mid = ctx.origin;
    spec.camera = sample_camera(ctx.rng, action_mid, params.width);

    const double az = ctx.rng.uniform(0.0, 6.283185307179586);
    const double elev = ctx.rng.uniform(0.84, 1.26);  // 48..72 degrees
    spec.light_dir = {std::cos(elev) * std::cos(az), std::sin(elev), std::cos(elev) * std::sin(az)};
    spec.ground_albedo = {std::clamp(0.4 + ctx.rng.uniform(-0.08, 0.12), 0.25, 0.6),
                          std::clamp(0.4 + ctx.rng.uniform(-0.08, 0.12), 0.25, 0.6),
                          std::clamp(0.4 + ctx.rng.uniform(-0.08, 0.12), 0.25, 0.6)};
    return spec;
}

std::vector<int> select_removal_targets(const SceneSpec& spec, std::uint64_t seed) {
    std::vector<int> dynamic = spec.dynamic_ids();
    if (dynamic.size() < 2) throw TooFewBodies("select_removal_targets needs >= 2 dynamic bodies");
    std::sort(dynamic.begin(), dynamic.end());

    SplitMix64 rng(mix64(seed, 0x7265'6d6f'7665ull));  // fixed stream tag
    const int max_targets = static_cast<int>((dynamic.size() + 1) / 2);
    const int count = rng.uniform_int(1, max_targets);
    // partial Fisher-Yates over the sorted id list
    for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.next_below(dynamic.size() - i));
        std::swap(dynamic[i], dynamic[j]);
    }
    std::vector<int> targets(dynamic.begin(), dynamic.begin() + count);
    std::sort(targets.begin(), targets.end());
    return targets;
}

std::vector<ValidationIssue> validate_spec(const SceneSpec& spec) {
    std::vector<ValidationIssue> issues;
    auto add = [&](std::string field, std::string message) {
        issues.push_back({std::move(field), std::move(message)});
    };
    char buf[96];

    std::vector<int> seen_ids;
    for (std::size_t i = 0; i < spec.bodies.size(); ++i) {
        const BodySpec& b = spec.bodies[i];
        if (b.id < 1) {
            std::snprintf(buf, sizeof buf, "bodies[%zu].id", i);
            add(buf, "body ids must be >= 1 (0 is the background label)");
        }
        if (std::find(seen_ids.begin(), seen_ids.end(), b.id) != seen_ids.end()) {
            std::snprintf(buf, sizeof buf, "bodies[%zu].id", i);
            add(buf, "duplicate body id " + std::to_string(b.id));
        }
        seen_ids.push_back(b.id);
        if (b.shape == ShapeKind::Sphere && !(b.radius > 0)) {
            std::snprintf(buf, sizeof buf, "bodies[%zu].radius", i);
            add(buf, "radius must be > 0");
        }
        if (b.shape == ShapeKind::Box &&
            !(b.half_extents.x > 0 && b.half_extents.y > 0 && b.half_extents.z > 0)) {
            std::snprintf(buf, sizeof buf, "bodies[%zu].half_extents", i);
            add(buf, "all half extents must be > 0");
        }
        if (!b.is_static && !(b.mass > 0)) {
            std::snprintf(buf, sizeof buf, "bodies[%zu].mass", i);
            add(buf, "mass must be > 0 unless static");
        }
        if (!(b.restitution >= 0.0 && b.restitution <= 1.0)) {
            std::snprintf(buf, sizeof buf, "bodies[%zu].restitution", i);
            add(buf, "restitution must lie in [0, 1]");
        }
        if (!b.position0.finite() || !b.velocity0.finite()) {
            std::snprintf(buf, sizeof buf, "bodies[%zu].position0", i);
            add(buf, "initial state must be finite");
        }
    }

    if (!(spec.camera.radius0 > 0) || !(spec.camera.radius1 > 0))
        add("camera.radius", "camera radii must be > 0");
    if (!(spec.camera.focal0 > 0) || !(spec.camera.focal1 > 0))
        add("camera.focal", "focal lengths must be > 0");

    if (spec.removal_targets.empty())
        add("removal_targets", "removal target set must be nonempty");
    for (int id : spec.removal_targets) {
        const BodySpec* b = spec.body_by_id(id);
        if (!b)
            add("removal_targets", "unknown body id " + std::to_string(id));
        else if (!b->dynamic())
            add("removal_targets", "target " + std::to_string(id) + " is not dynamic");
    }

    if (spec.frames < 2) add("frames", "frame count must be >= 2");
    if (spec.substeps < 1) add("substeps", "substeps must be >= 1");
    if (spec.width < 1 || spec.height < 1) add("resolution", "resolution must be positive");
    if (std::fabs(spec.light_dir.norm() - 1.0) > 1e-9)
        add("light_dir", "light direction must have unit norm within 1e-9");

    for (std::size_t i = 0; i < spec.bodies.size(); ++i)
        for (std::size_t j = i + 1; j < spec.bodies.size(); ++j)
            if (body_gap(spec.bodies[i], spec.bodies[j]) < 1e-6) {
                std::snprintf(buf, sizeof buf, "bodies[%zu]/bodies[%zu]", i, j);
                add(buf, "PlacementOverlap: pairwise separation below 1e-6 m");
            }

    return issues;
}

namespace {

nlohmann::ordered_json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

Vec3 vec_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

nlohmann::ordered_json scene_to_json(const SceneSpec& spec) {
    nlohmann::ordered_json j;
    j["schema"] = kSceneSchema;
    j["scene_seed"] = spec.scene_seed;
    j["template"] = spec.template_name;
    j["frames"] = spec.frames;
    j["fps"] = spec.fps;
    j["substeps"] = spec.substeps;
    j["resolution"] = {spec.width, spec.height};
    j["gravity"] = vec_json(spec.gravity);
    j["light_dir"] = vec_json(spec.light_dir);
    j["ground_albedo"] = vec_json(spec.ground_albedo);

    nlohmann::ordered_json cam;
    cam["mode"] = spec.camera.mode == CameraTrajectorySpec::Mode::Orbit ? "orbit" : "dolly";
    cam["center"] = vec_json(spec.camera.center);
    cam["radius"] = {spec.camera.radius0, spec.camera.radius1};
    cam["height"] = {spec.camera.height0, spec.camera.height1};
    cam["angle"] = {spec.camera.angle0, spec.camera.angle1};
    cam["focal"] = {spec.camera.focal0, spec.camera.focal1};
    j["camera"] = std::move(cam);

    nlohmann::ordered_json bodies = nlohmann::ordered_json::array();
    for (const BodySpec& b : spec.bodies) {
        nlohmann::ordered_json jb;
        jb["id"] = b.id;
        if (b.shape == ShapeKind::Sphere) {
            jb["shape"] = "sphere";
            jb["radius"] = b.radius;
        } else {
            jb["shape"] = "box";
            jb["half_extents"] = vec_json(b.half_extents);
        }
        if (b.is_static)
            jb["mass"] = nullptr;
        else
            jb["mass"] = b.mass;
        jb["position"] = vec_json(b.position0);
        jb["velocity"] = vec_json(b.velocity0);
        jb["restitution"] = b.restitution;
        jb["albedo"] = vec_json(b.albedo);
        bodies.push_back(std::move(jb));
    }
    j["bodies"] = std::move(bodies);
    j["removal_targets"] = spec.removal_targets;
    return j;
}

SceneSpec scene_from_json(const nlohmann::json& j) {
    if (j.at("schema").get<std::string>() != kSceneSchema)
        throw IoError("scene: unexpected schema " + j.at("schema").get<std::string>());
    SceneSpec spec;
    spec.scene_seed = j.at("scene_seed").get<std::uint64_t>();
    spec.template_name = j.at("template").get<std::string>();
    spec.frames = j.at("frames").get<int>();
    spec.fps = j.at("fps").get<double>();
    spec.substeps = j.at("substeps").get<int>();
    spec.width = j.at("resolution").at(0).get<int>();
    spec.height = j.at("resolution").at(1).get<int>();
    spec.gravity = vec_from_json(j.at("gravity"));
    spec.light_dir = vec_from_json(j.at("light_dir"));
    spec.ground_albedo = vec_from_json(j.at("ground_albedo"));

    const auto& cam = j.at("camera");
    spec.camera.mode = cam.at("mode").get<std::string>() == "orbit"
                           ? CameraTrajectorySpec::Mode::Orbit
                           : CameraTrajectorySpec::Mode::Dolly;
    spec.camera.center = vec_from_json(cam.at("center"));
    spec.camera.radius0 = cam.at("radius").at(0).get<double>();
    spec.camera.radius1 = cam.at("radius").at(1).get<double>();
    spec.camera.height0 = cam.at("height").at(0).get<double>();
    spec.camera.height1 = cam.at("height").at(1).get<double>();
    spec.camera.angle0 = cam.at("angle").at(0).get<double>();
    spec.camera.angle1 = cam.at("angle").at(1).get<double>();
    spec.camera.focal0 = cam.at("focal").at(0).get<double>();
    spec.camera.focal1 = cam.at("focal").at(1).get<double>();

    for (const auto& jb : j.at("bodies")) {
        BodySpec b;
        b.id = jb.at("id").get<int>();
        const std::string shape = jb.at("shape").get<std::string>();
        if (shape == "sphere") {
            b.shape = ShapeKind::Sphere;
            b.radius = jb.at("radius").get<double>();
        } else if (shape == "box") {
            b.shape = ShapeKind::Box;
            b.half_extents = vec_from_json(jb.at("half_extents"));
        } else {
            throw IoError("scene: unknown shape " + shape);
        }
        if (jb.at("mass").is_null()) {
            b.is_static = true;
            b.mass = 0.0;
        } else {
            b.is_static = false;
            b.mass = jb.at("mass").get<double>();
        }
        b.position0 = vec_from_json(jb.at("position"));
        b.velocity0 = vec_from_json(jb.at("velocity"));
        b.restitution = jb.at("restitution").get<double>();
        b.albedo = vec_from_json(jb.at("albedo"));
        spec.bodies.push_back(b);
    }
    spec.removal_targets = j.at("removal_targets").get<std::vector<int>>();
    return spec;
}

std::string scene_to_string(const SceneSpec& spec) { return scene_to_json(spec).dump(2) + "\n"; }

SceneSpec scene_from_string(const std::string& text) {
    return scene_from_json(nlohmann::json::parse(text));
}

}  // namespace voidforge
