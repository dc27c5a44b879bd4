#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voidforge/vec3.hpp"

#include "json.hpp"

namespace voidforge {

enum class ShapeKind { Sphere, Box };

struct BodySpec {
    int id = 0;  // unique per scene, >= 1 (0 is the background/ground label)
    ShapeKind shape = ShapeKind::Sphere;
    double radius = 0.1;            // Sphere
    Vec3 half_extents{0.1, 0.1, 0.1};  // Box
    double mass = 1.0;              // ignored when is_static
    bool is_static = false;
    Vec3 position0;
    Vec3 velocity0;
    double restitution = 0.5;
    Vec3 albedo{0.5, 0.5, 0.5};

    bool dynamic() const { return !is_static; }
    double inv_mass() const { return is_static ? 0.0 : 1.0 / mass; }
    // largest body dimension; the second-pass displacement trigger scales on it
    double characteristic_size() const {
        if (shape == ShapeKind::Sphere) return radius;
        return std::max(half_extents.x, std::max(half_extents.y, half_extents.z));
    }
    // distance from center to lowest point (ground support height)
    double support_height() const {
        return shape == ShapeKind::Sphere ? radius : half_extents.y;
    }
};

struct CameraTrajectorySpec {
    enum class Mode { Orbit, Dolly };
    Mode mode = Mode::Orbit;
    Vec3 center;
    double radius0 = 3.0, radius1 = 3.0;
    double height0 = 1.5, height1 = 1.5;
    double angle0 = 0.0, angle1 = 0.5;
    double focal0 = 150.0, focal1 = 150.0;  // pixels
};

struct SceneSpec {
    std::uint64_t scene_seed = 0;
    std::string template_name;  // collision_chain | support_removal | obstruction_removal
    std::vector<BodySpec> bodies;
    CameraTrajectorySpec camera;
    std::vector<int> removal_targets;  // sorted, unique
    int frames = 49;
    double fps = 24.0;
    int substeps = 10;
    int width = 128;
    int height = 128;
    Vec3 light_dir{0.3, 0.8, 0.52};  // unit, points toward the light
    Vec3 ground_albedo{0.45, 0.45, 0.42};
    Vec3 gravity{0.0, -9.81, 0.0};

    double frame_dt() const { return 1.0 / fps; }
    double substep_dt() const { return 1.0 / (fps * substeps); }
    const BodySpec* body_by_id(int id) const {
        for (const auto& b : bodies)
            if (b.id == id) return &b;
        return nullptr;
    }
    bool is_removal_target(int id) const {
        for (int t : removal_targets)
            if (t == id) return true;
        return false;
    }
    std::vector<int> dynamic_ids() const {
        std::vector<int> ids;
        for (const auto& b : bodies)
            if (b.dynamic()) ids.push_back(b.id);
        return ids;
    }
};

struct SamplerParams {
    int min_bodies = 3;
    int max_bodies = 8;
    double min_radius = 0.05;
    double max_radius = 0.3;
    double min_half_extent = 0.05;
    double max_half_extent = 0.3;
    double max_speed = 4.0;
    int frames = 49;
    double fps = 24.0;
    int substeps = 10;
    int width = 128;
    int height = 128;
    std::array<double, 3> template_weights{1.0, 1.0, 1.0};  // chain, support, obstruction
    int placement_retries = 64;
};

inline constexpr const char* kSceneSchema = "void-forge/scene/1";
inline constexpr const char* kTemplateNames[3] = {"collision_chain", "support_removal",
                                                  "obstruction_removal"};

// Deterministic procedural sampler. scene_seed = mix64(master_seed, scene_index).
SceneSpec sample_scene(std::uint64_t master_seed, std::uint64_t scene_index,
                       const SamplerParams& params = {});

// Picks 1..ceil(#dynamic/2) dynamic bodies, deterministic in seed.
std::vector<int> select_removal_targets(const SceneSpec& spec, std::uint64_t seed);

struct ValidationIssue {
    std::string field;
    std::string message;
};
std::vector<ValidationIssue> validate_spec(const SceneSpec& spec);

// Pairwise surface gap (negative = penetrating); used by placement and validation.
double body_gap(const BodySpec& a, const BodySpec& b);

nlohmann::ordered_json scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const nlohmann::json& j);
std::string scene_to_string(const SceneSpec& spec);  // stable bytes
SceneSpec scene_from_string(const std::string& text);

}  // namespace voidforge
