#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "voidforge/scene.hpp"
#include "voidforge/vec3.hpp"

namespace voidforge {

struct BodyState {
    int id = 0;
    Vec3 position;
    Vec3 velocity;
    bool alive = true;
};

struct ContactEvent {
    int frame = 0;
    int id_a = 0;
    int id_b = 0;  // -1 = ground plane
    Vec3 normal;   // from b toward a
    double impulse = 0.0;  // magnitude, summed over the frame's substeps
};

struct Trajectory {
    std::uint64_t scene_seed = 0;
    int frames = 0;
    double frame_dt = 0.0;
    std::vector<std::vector<BodyState>> states;  // [frame][body index as in spec.bodies]
    std::vector<ContactEvent> contact_events;
};

struct CounterfactualPair {
    Trajectory factual;
    Trajectory counterfactual;
    std::vector<int> removed_ids;
    std::vector<int> affected_ids;
    std::optional<int> first_divergence_frame;
};

struct Contact {
    int a = 0;        // body index
    int b = -1;       // body index, or -1 for the ground plane
    Vec3 normal;      // unit, from b toward a
    double penetration = 0.0;  // >= 0
};

inline constexpr int kGroundId = -1;
inline constexpr double kBlowupLimit = 1e6;       // m or m/s per component
inline constexpr double kRestingSpeed = 0.05;     // m/s; below this restitution is dropped
inline constexpr double kDivergenceEps = 1e-6;    // m

// Exact narrow-phase tests over alive bodies (and the ground plane). Pairs
// where both sides have zero inverse mass are skipped.
std::vector<Contact> detect_contacts(const std::vector<BodyState>& states, const SceneSpec& spec);

// One fixed substep: gravity, impulse resolution, integration, positional
// projection. Deterministic contact ordering by (min id, max id).
void step(std::vector<BodyState>& states, const SceneSpec& spec, double dt);

// Initial states for a run; bodies listed in removed_ids start not-alive.
std::vector<BodyState> initial_states(const SceneSpec& spec, const std::vector<int>& removed_ids);

Trajectory simulate(const SceneSpec& spec, const std::vector<int>& removed_ids = {});

CounterfactualPair simulate_counterfactual(const SceneSpec& spec);

struct AffectedResult {
    std::vector<int> ids;
    std::optional<int> first_frame;
};
// A surviving body is affected iff some frame has position divergence > eps.
AffectedResult affected_bodies(const Trajectory& factual, const Trajectory& counterfactual,
                               double eps = kDivergenceEps);

double kinetic_energy(const std::vector<BodyState>& states, const SceneSpec& spec);
Vec3 linear_momentum(const std::vector<BodyState>& states, const SceneSpec& spec);

}  // namespace voidforge
