#include "voidforge/physics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "voidforge/errors.hpp"

namespace voidforge {

namespace {

struct PairKey {
    int id_a;  // smaller id (ground = -1 sorts first)
    int id_b;
    bool operator<(const PairKey& o) const {
        return id_a != o.id_a ? id_a < o.id_a : id_b < o.id_b;
    }
};

std::optional<Contact> sphere_sphere(int ia, int ib, const Vec3& ca, double ra, const Vec3& cb,
                                     double rb) {
    const Vec3 d = ca - cb;
    const double dist = d.norm();
    const double pen = ra + rb - dist;
    if (pen < 0.0) return std::nullopt;
    const Vec3 n = dist > 0.0 ? d / dist : Vec3{0.0, 1.0, 0.0};
    return Contact{ia, ib, n, pen};
}

std::optional<Contact> sphere_box(int ia, int ib, const Vec3& c, double r, const Vec3& bc,
                                  const Vec3& h) {
    const Vec3 d = c - bc;
    const Vec3 q{std::clamp(d.x, -h.x, h.x), std::clamp(d.y, -h.y, h.y),
                 std::clamp(d.z, -h.z, h.z)};
    const Vec3 delta = d - q;
    const double dist = delta.norm();
    if (dist > 0.0) {
        const double pen = r - dist;
        if (pen < 0.0) return std::nullopt;
        return Contact{ia, ib, delta / dist, pen};
    }
    // center inside the box: exit through the nearest face
    const double fx = h.x - std::fabs(d.x);
    const double fy = h.y - std::fabs(d.y);
    const double fz = h.z - std::fabs(d.z);
    Vec3 n{0.0, 1.0, 0.0};
    double depth = fy;
    if (fx <= fy && fx <= fz) {
        n = {d.x >= 0.0 ? 1.0 : -1.0, 0.0, 0.0};
        depth = fx;
    } else if (fz <= fx && fz <= fy) {
        n = {0.0, 0.0, d.z >= 0.0 ? 1.0 : -1.0};
        depth = fz;
    } else {
        n = {0.0, d.y >= 0.0 ? 1.0 : -1.0, 0.0};
    }
    return Contact{ia, ib, n, r + depth};
}

std::optional<Contact> box_box(int ia, int ib, const Vec3& ca, const Vec3& ha, const Vec3& cb,
                               const Vec3& hb) {
    const Vec3 d = ca - cb;
    const double ox = (ha.x + hb.x) - std::fabs(d.x);
    const double oy = (ha.y + hb.y) - std::fabs(d.y);
    const double oz = (ha.z + hb.z) - std::fabs(d.z);
    if (ox < 0.0 || oy < 0.0 || oz < 0.0) return std::nullopt;
    // minimal-penetration axis, axis order breaking ties
    if (ox <= oy && ox <= oz) return Contact{ia, ib, {d.x >= 0.0 ? 1.0 : -1.0, 0.0, 0.0}, ox};
    if (oy <= oz) return Contact{ia, ib, {0.0, d.y >= 0.0 ? 1.0 : -1.0, 0.0}, oy};
    return Contact{ia, ib, {0.0, 0.0, d.z >= 0.0 ? 1.0 : -1.0}, oz};
}

void sort_contacts(std::vector<Contact>& contacts, const SceneSpec& spec) {
    auto key = [&](const Contact& c) {
        const int id_a = spec.bodies[c.a].id;
        const int id_b = c.b == kGroundId ? kGroundId : spec.bodies[c.b].id;
        return PairKey{std::min(id_a, id_b), std::max(id_a, id_b)};
    };
    std::sort(contacts.begin(), contacts.end(),
              [&](const Contact& x, const Contact& y) { return key(x) < key(y); });
}

constexpr int kVelocityIterations = 8;
constexpr int kPositionPasses = 4;
constexpr double kPositionCorrection = 0.8;

struct EventAccumulator {
    Vec3 normal;
    double impulse = 0.0;
};
using EventSink = std::map<PairKey, EventAccumulator>;

void resolve_velocities(std::vector<BodyState>& states, const SceneSpec& spec,
                        const std::vector<Contact>& contacts, EventSink* sink) {
    // fixed iteration count: the prefix bit-identity between factual and
    // counterfactual runs requires control flow independent of bodies a
    // contact does not touch
    for (int iter = 0; iter < kVelocityIterations; ++iter) {
        for (const Contact& c : contacts) {
            BodyState& a = states[c.a];
            const BodySpec& spec_a = spec.bodies[c.a];
            const double inv_a = spec_a.inv_mass();
            double inv_b = 0.0;
            double e = spec_a.restitution;
            Vec3 vb{};
            if (c.b != kGroundId) {
                const BodySpec& spec_b = spec.bodies[c.b];
                inv_b = spec_b.inv_mass();
                e *= spec_b.restitution;  // the ground combines as restitution 1
                vb = states[c.b].velocity;
            }
            const double inv_sum = inv_a + inv_b;
            if (inv_sum <= 0.0) continue;
            const double vn = dot(a.velocity - vb, c.normal);
            if (vn >= 0.0) continue;  // separating or resting
            if (-vn < kRestingSpeed) e = 0.0;
            const double j = -(1.0 + e) * vn / inv_sum;
            a.velocity += c.normal * (j * inv_a);
            if (c.b != kGroundId) states[c.b].velocity -= c.normal * (j * inv_b);
            if (sink) {
                const int id_a = spec.bodies[c.a].id;
                const int id_b = c.b == kGroundId ? kGroundId : spec.bodies[c.b].id;
                auto& acc = (*sink)[PairKey{std::min(id_a, id_b), std::max(id_a, id_b)}];
                acc.normal = c.normal;
                acc.impulse += j;
            }
        }
    }
}

void project_positions(std::vector<BodyState>& states, const SceneSpec& spec) {
    // fixed pass count, same reasoning as the velocity loop
    for (int pass = 0; pass < kPositionPasses; ++pass) {
        std::vector<Contact> contacts = detect_contacts(states, spec);
        sort_contacts(contacts, spec);
        for (const Contact& c : contacts) {
            if (c.penetration <= 0.0) continue;
            const double inv_a = spec.bodies[c.a].inv_mass();
            const double inv_b = c.b == kGroundId ? 0.0 : spec.bodies[c.b].inv_mass();
            const double inv_sum = inv_a + inv_b;
            if (inv_sum <= 0.0) continue;
            const double move = kPositionCorrection * c.penetration / inv_sum;
            states[c.a].position += c.normal * (move * inv_a);
            if (c.b != kGroundId) states[c.b].position -= c.normal * (move * inv_b);
        }
    }
}

void check_finite(const std::vector<BodyState>& states) {
    for (const BodyState& s : states) {
        if (!s.alive) continue;
        const auto bad = [](const Vec3& v) {
            return !v.finite() || std::fabs(v.x) > kBlowupLimit || std::fabs(v.y) > kBlowupLimit ||
                   std::fabs(v.z) > kBlowupLimit;
        };
        if (bad(s.position) || bad(s.velocity))
            throw NumericalBlowup("body " + std::to_string(s.id) +
                                  " exceeded the 1e6 magnitude limit");
    }
}

void step_impl(std::vector<BodyState>& states, const SceneSpec& spec, double dt, EventSink* sink) {
    if (!(dt > 0.0)) throw RangeError("step: dt must be > 0");

    for (std::size_t i = 0; i < states.size(); ++i) {
        BodyState& s = states[i];
        if (!s.alive || spec.bodies[i].is_static) continue;
        s.velocity += spec.gravity * dt;
    }

    std::vector<Contact> contacts = detect_contacts(states, spec);
    sort_contacts(contacts, spec);
    resolve_velocities(states, spec, contacts, sink);

    for (std::size_t i = 0; i < states.size(); ++i) {
        BodyState& s = states[i];
        if (!s.alive || spec.bodies[i].is_static) continue;
        s.position += s.velocity * dt;
    }

    project_positions(states, spec);
    check_finite(states);
}

}  // namespace

std::vector<Contact> detect_contacts(const std::vector<BodyState>& states, const SceneSpec& spec) {
    std::vector<Contact> contacts;
    const int n = static_cast<int>(states.size());
    for (int i = 0; i < n; ++i) {
        const BodyState& a = states[i];
        if (!a.alive) continue;
        const BodySpec& sa = spec.bodies[i];

        // ground plane (y = 0)
        if (sa.inv_mass() > 0.0) {
            const double pen = sa.support_height() - a.position.y;
            if (pen >= 0.0) contacts.push_back({i, kGroundId, {0.0, 1.0, 0.0}, pen});
        }

        for (int j = i + 1; j < n; ++j) {
            const BodyState& b = states[j];
            if (!b.alive) continue;
            const BodySpec& sb = spec.bodies[j];
            if (sa.inv_mass() + sb.inv_mass() <= 0.0) continue;

            std::optional<Contact> c;
            if (sa.shape == ShapeKind::Sphere && sb.shape == ShapeKind::Sphere)
                c = sphere_sphere(i, j, a.position, sa.radius, b.position, sb.radius);
            else if (sa.shape == ShapeKind::Sphere && sb.shape == ShapeKind::Box)
                c = sphere_box(i, j, a.position, sa.radius, b.position, sb.half_extents);
            else if (sa.shape == ShapeKind::Box && sb.shape == ShapeKind::Sphere) {
                c = sphere_box(j, i, b.position, sb.radius, a.position, sa.half_extents);
            } else {
                c = box_box(i, j, a.position, sa.half_extents, b.position, sb.half_extents);
            }
            if (c) contacts.push_back(*c);
        }
    }
    return contacts;
}

void step(std::vector<BodyState>& states, const SceneSpec& spec, double dt) {
    step_impl(states, spec, dt, nullptr);
}

std::vector<BodyState> initial_states(const SceneSpec& spec, const std::vector<int>& removed_ids) {
    for (int id : removed_ids)
        if (!spec.body_by_id(id)) throw UnknownId("removed id " + std::to_string(id));
    std::vector<BodyState> states;
    states.reserve(spec.bodies.size());
    for (const BodySpec& b : spec.bodies) {
        const bool removed =
            std::find(removed_ids.begin(), removed_ids.end(), b.id) != removed_ids.end();
        states.push_back({b.id, b.position0, b.velocity0, !removed});
    }
    return states;
}

Trajectory simulate(const SceneSpec& spec, const std::vector<int>& removed_ids) {
    Trajectory traj;
    traj.scene_seed = spec.scene_seed;
    traj.frames = spec.frames;
    traj.frame_dt = spec.frame_dt();

    std::vector<BodyState> states = initial_states(spec, removed_ids);
    traj.states.push_back(states);

    const double dt = spec.substep_dt();
    for (int frame = 1; frame < spec.frames; ++frame) {
        EventSink sink;
        for (int s = 0; s < spec.substeps; ++s) {
            try {
                step_impl(states, spec, dt, &sink);
            } catch (const NumericalBlowup& e) {
                throw NumericalBlowup(std::string(e.what()) + " (frame " + std::to_string(frame) +
                                      ")");
            }
        }
        traj.states.push_back(states);
        for (const auto& [key, acc] : sink)
            traj.contact_events.push_back({frame, key.id_a, key.id_b, acc.normal, acc.impulse});
    }
    return traj;
}

CounterfactualPair simulate_counterfactual(const SceneSpec& spec) {
    CounterfactualPair pair;
    pair.removed_ids = spec.removal_targets;
    pair.factual = simulate(spec, {});
    pair.counterfactual = simulate(spec, spec.removal_targets);
    const AffectedResult res = affected_bodies(pair.factual, pair.counterfactual, kDivergenceEps);
    pair.affected_ids = res.ids;
    pair.first_divergence_frame = res.first_frame;
    return pair;
}

AffectedResult affected_bodies(const Trajectory& factual, const Trajectory& counterfactual,
                               double eps) {
    if (factual.frames != counterfactual.frames ||
        factual.states.size() != counterfactual.states.size())
        throw ShapeMismatch("affected_bodies: trajectories have different frame counts");
    AffectedResult result;
    if (factual.states.empty()) return result;
    const std::size_t n = factual.states[0].size();
    if (counterfactual.states[0].size() != n)
        throw ShapeMismatch("affected_bodies: trajectories have different body counts");

    int first = -1;
    for (std::size_t b = 0; b < n; ++b) {
        if (!counterfactual.states[0][b].alive) continue;  // removed, not a survivor
        for (int t = 0; t < factual.frames; ++t) {
            const Vec3 d = factual.states[t][b].position - counterfactual.states[t][b].position;
            if (d.norm() > eps) {
                result.ids.push_back(factual.states[t][b].id);
                if (first < 0 || t < first) first = t;
                break;
            }
        }
    }
    std::sort(result.ids.begin(), result.ids.end());
    if (first >= 0) result.first_frame = first;
    return result;
}

double kinetic_energy(const std::vector<BodyState>& states, const SceneSpec& spec) {
    double e = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!states[i].alive || spec.bodies[i].is_static) continue;
        e += 0.5 * spec.bodies[i].mass * states[i].velocity.norm2();
    }
    return e;
}

Vec3 linear_momentum(const std::vector<BodyState>& states, const SceneSpec& spec) {
    Vec3 p;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!states[i].alive || spec.bodies[i].is_static) continue;
        p += states[i].velocity * spec.bodies[i].mass;
    }
    return p;
}

}  // namespace voidforge
