#include "voidforge/masks.hpp"

#include <algorithm>
#include <cmath>

#include "voidforge/errors.hpp"

namespace voidforge {

std::size_t BinaryMaskSeq::count_set() const {
    std::size_t n = 0;
    for (const std::uint8_t v : data) n += v != 0;
    return n;
}

BinaryMaskSeq mask_union(const BinaryMaskSeq& a, const BinaryMaskSeq& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("mask_union: shape mismatch");
    BinaryMaskSeq out(a.frames, a.width, a.height, MaskRole::AffectedUnion);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] | b.data[i];
    return out;
}

namespace {

void require_packets_match(std::span<const FramePacket> packets) {
    if (packets.empty()) throw ShapeMismatch("empty packet sequence");
    for (const FramePacket& p : packets)
        if (p.width != packets[0].width || p.height != packets[0].height)
            throw ShapeMismatch("packet sequence resolution varies");
}

bool contains(const std::vector<int>& ids, int id) {
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

}  // namespace

BinaryMaskSeq object_mask(std::span<const FramePacket> packets, const std::vector<int>& removed_ids,
                          const SceneSpec& spec) {
    require_packets_match(packets);
    for (int id : removed_ids)
        if (!spec.body_by_id(id))
            throw UnknownId("object_mask: id " + std::to_string(id) + " not in scene");

    const int w = packets[0].width, h = packets[0].height;
    BinaryMaskSeq mask(static_cast<int>(packets.size()), w, h, MaskRole::ObjectMask);
    for (std::size_t t = 0; t < packets.size(); ++t)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (contains(removed_ids, packets[t].instance[packets[t].index(x, y)]))
                    mask.set(static_cast<int>(t), x, y, true);
    return mask;
}

BinaryMaskSeq instance_silhouettes(std::span<const FramePacket> packets,
                                   const std::vector<int>& ids, MaskRole role) {
    require_packets_match(packets);
    const int w = packets[0].width, h = packets[0].height;
    BinaryMaskSeq mask(static_cast<int>(packets.size()), w, h, role);
    for (std::size_t t = 0; t < packets.size(); ++t)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (contains(ids, packets[t].instance[packets[t].index(x, y)]))
                    mask.set(static_cast<int>(t), x, y, true);
    return mask;
}

BinaryMaskSeq affected_pixel_region(std::span<const FramePacket> factual,
                                    std::span<const FramePacket> counterfactual,
                                    const std::vector<int>& affected_ids) {
    require_packets_match(factual);
    require_packets_match(counterfactual);
    if (factual.size() != counterfactual.size() || factual[0].width != counterfactual[0].width ||
        factual[0].height != counterfactual[0].height)
        throw ShapeMismatch("affected_pixel_region: packet sequences not aligned");

    const int w = factual[0].width, h = factual[0].height;
    BinaryMaskSeq mask(static_cast<int>(factual.size()), w, h, MaskRole::AffectedUnion);
    for (std::size_t t = 0; t < factual.size(); ++t) {
        const FramePacket& f = factual[t];
        const FramePacket& c = counterfactual[t];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = f.index(x, y);
                const bool hit = contains(affected_ids, f.instance[i]) ||
                                 contains(affected_ids, c.instance[i]) ||
                                 f.shadow[i] != c.shadow[i];
                if (hit) mask.set(static_cast<int>(t), x, y, true);
            }
    }
    return mask;
}

BinaryMaskSeq gridify(const BinaryMaskSeq& mask, int cells_per_side) {
    if (cells_per_side < 1) throw RangeError("gridify: grid must be >= 1");
    const int cw = (mask.width + cells_per_side - 1) / cells_per_side;
    const int ch = (mask.height + cells_per_side - 1) / cells_per_side;

    BinaryMaskSeq out(mask.frames, mask.width, mask.height, mask.role);
    for (int t = 0; t < mask.frames; ++t) {
        for (int cy = 0; cy < cells_per_side; ++cy) {
            for (int cx = 0; cx < cells_per_side; ++cx) {
                const int x0 = cx * cw, x1 = std::min(mask.width, x0 + cw);
                const int y0 = cy * ch, y1 = std::min(mask.height, y0 + ch);
                bool any = false;
                for (int y = y0; y < y1 && !any; ++y)
                    for (int x = x0; x < x1; ++x)
                        if (mask.at(t, x, y)) {
                            any = true;
                            break;
                        }
                if (!any) continue;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) out.set(t, x, y, true);
            }
        }
    }
    return out;
}

QuadMaskSeq compose_quadmask(const BinaryMaskSeq& object, const BinaryMaskSeq& affected) {
    if (!object.same_shape(affected)) throw ShapeMismatch("compose_quadmask: shape mismatch");
    QuadMaskSeq quad(object.frames, object.width, object.height);
    for (std::size_t i = 0; i < quad.labels.size(); ++i) {
        const bool in_o = object.data[i] != 0;
        const bool in_a = affected.data[i] != 0;
        QuadLabel label = QuadLabel::White;
        if (in_o && in_a) label = QuadLabel::DarkGrey;
        else if (in_o) label = QuadLabel::Black;
        else if (in_a) label = QuadLabel::LightGrey;
        quad.labels[i] = static_cast<std::uint8_t>(label);
    }
    return quad;
}

QuadMaskSeq compose_trimask(const BinaryMaskSeq& object) {
    QuadMaskSeq tri(object.frames, object.width, object.height);
    for (std::size_t i = 0; i < tri.labels.size(); ++i)
        tri.labels[i] = static_cast<std::uint8_t>(object.data[i] != 0 ? QuadLabel::Black
                                                                      : QuadLabel::LightGrey);
    return tri;
}

BinaryMaskSeq cells_to_mask(const std::vector<std::vector<GridCell>>& cells, int grid, int frames,
                            int width, int height) {
    if (static_cast<int>(cells.size()) != frames)
        throw ShapeMismatch("cells_to_mask: per-frame cell list count mismatch");
    const int cw = (width + grid - 1) / grid;
    const int ch = (height + grid - 1) / grid;
    BinaryMaskSeq mask(frames, width, height, MaskRole::AffectedCount);
    for (int t = 0; t < frames; ++t) {
        for (const GridCell& cell : cells[t]) {
            if (cell.row < 0 || cell.row >= grid || cell.col < 0 || cell.col >= grid)
                throw ProtocolError("cell out of range at frame " + std::to_string(t) + ": (" +
                                    std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                                    ") with grid " + std::to_string(grid));
            const int x0 = cell.col * cw, x1 = std::min(width, x0 + cw);
            const int y0 = cell.row * ch, y1 = std::min(height, y0 + ch);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) mask.set(t, x, y, true);
        }
    }
    return mask;
}

std::vector<std::vector<GridCell>> mask_to_cells(const BinaryMaskSeq& mask, int grid) {
    const int cw = (mask.width + grid - 1) / grid;
    const int ch = (mask.height + grid - 1) / grid;
    std::vector<std::vector<GridCell>> cells(mask.frames);
    for (int t = 0; t < mask.frames; ++t) {
        for (int row = 0; row < grid; ++row)
            for (int col = 0; col < grid; ++col) {
                const int x0 = col * cw, x1 = std::min(mask.width, x0 + cw);
                const int y0 = row * ch, y1 = std::min(mask.height, y0 + ch);
                bool any = false;
                for (int y = y0; y < y1 && !any; ++y)
                    for (int x = x0; x < x1; ++x)
                        if (mask.at(t, x, y)) {
                            any = true;
                            break;
                        }
                if (any) cells[t].push_back({row, col});
            }
    }
    return cells;
}

BinaryMaskSeq combine_affected(const RegionInference& inference, int grid, int width, int height) {
    const BinaryMaskSeq count_mask = cells_to_mask(inference.counterfactual_cells, grid,
                                                   inference.affected_orig.frames, width, height);
    return mask_union(inference.affected_orig, count_mask);
}

QuadMaskSeq quadmask_from_reasoner(RegionReasoner& reasoner, std::span<const FramePacket> frames,
                                   const BinaryMaskSeq& object_mask) {
    const RegionInference inference = reasoner.infer_affected(frames, object_mask);
    const BinaryMaskSeq affected =
        combine_affected(inference, reasoner.grid(), object_mask.width, object_mask.height);
    return compose_quadmask(object_mask, affected);
}

bool needs_second_pass_from_pair(const CounterfactualPair& pair, const SceneSpec& spec,
                                 const SecondPassConfig& config) {
    const int frames = pair.factual.frames;
    const double g = spec.gravity.norm();
    const double accel_threshold = config.accel_divergence_frac * g * pair.factual.frame_dt;

    for (int id : pair.affected_ids) {
        const BodySpec* body = spec.body_by_id(id);
        if (!body) continue;
        int body_index = -1;
        for (std::size_t i = 0; i < spec.bodies.size(); ++i)
            if (spec.bodies[i].id == id) body_index = static_cast<int>(i);

        // large displacement between variants
        const double limit = config.displacement_factor * body->characteristic_size();
        for (int t = 0; t < frames; ++t) {
            const Vec3 d = pair.factual.states[t][body_index].position -
                           pair.counterfactual.states[t][body_index].position;
            if (d.norm() > limit) return true;
        }

        // sustained vertical acceleration divergence (free fall signature)
        if (g > 0.0 && frames > config.free_fall_window) {
            int run = 0;
            for (int t = 1; t < frames; ++t) {
                const double dv_f = pair.factual.states[t][body_index].velocity.y -
                                    pair.factual.states[t - 1][body_index].velocity.y;
                const double dv_c = pair.counterfactual.states[t][body_index].velocity.y -
                                    pair.counterfactual.states[t - 1][body_index].velocity.y;
                run = std::fabs(dv_c - dv_f) > accel_threshold ? run + 1 : 0;
                if (run >= config.free_fall_window) return true;
            }
        }
    }
    return false;
}

namespace {

class GroundTruthReasoner final : public RegionReasoner {
  public:
    GroundTruthReasoner(const CounterfactualPair& pair, const PairRenders& renders,
                        const SceneSpec& spec, int grid, const SecondPassConfig& config)
        : pair_(pair), renders_(renders), spec_(spec), grid_(grid), config_(config) {}

    RegionInference infer_affected(std::span<const FramePacket>, const BinaryMaskSeq&) override {
        RegionInference out;
        // affected silhouettes in original positions plus shadow differences
        const BinaryMaskSeq factual_sil =
            instance_silhouettes(renders_.factual.packets, pair_.affected_ids,
                                 MaskRole::AffectedOrig);
        BinaryMaskSeq orig(factual_sil.frames, factual_sil.width, factual_sil.height,
                           MaskRole::AffectedOrig);
        for (std::size_t t = 0; t < renders_.factual.packets.size(); ++t) {
            const FramePacket& f = renders_.factual.packets[t];
            const FramePacket& c = renders_.counterfactual.packets[t];
            for (int y = 0; y < f.height; ++y)
                for (int x = 0; x < f.width; ++x) {
                    const std::size_t i = f.index(x, y);
                    if (factual_sil.at(static_cast<int>(t), x, y) || f.shadow[i] != c.shadow[i])
                        orig.set(static_cast<int>(t), x, y, true);
                }
        }
        out.affected_orig = std::move(orig);

        const BinaryMaskSeq counter_sil =
            instance_silhouettes(renders_.counterfactual.packets, pair_.affected_ids,
                                 MaskRole::AffectedCount);
        out.counterfactual_cells = mask_to_cells(counter_sil, grid_);
        return out;
    }

    bool needs_second_pass(std::span<const FramePacket>, const BinaryMaskSeq&) override {
        return needs_second_pass_from_pair(pair_, spec_, config_);
    }

    int grid() const override { return grid_; }

  private:
    const CounterfactualPair& pair_;
    const PairRenders& renders_;
    const SceneSpec& spec_;
    int grid_;
    SecondPassConfig config_;
};

}  // namespace

std::unique_ptr<RegionReasoner> ground_truth_reasoner(const CounterfactualPair& pair,
                                                      const PairRenders& renders,
                                                      const SceneSpec& spec, int grid,
                                                      const SecondPassConfig& config) {
    return std::make_unique<GroundTruthReasoner>(pair, renders, spec, grid, config);
}

PairMasks build_pair_masks(const CounterfactualPair& pair, const PairRenders& renders,
                           const SceneSpec& spec, int grid, const SecondPassConfig& config) {
    PairMasks masks;
    masks.grid = grid;
    masks.object = object_mask(renders.factual.packets, pair.removed_ids, spec);

    const BinaryMaskSeq region =
        affected_pixel_region(renders.factual.packets, renders.counterfactual.packets,
                              pair.affected_ids);
    const BinaryMaskSeq counter_sil = instance_silhouettes(
        renders.counterfactual.packets, pair.affected_ids, MaskRole::AffectedCount);
    masks.affected = mask_union(region, gridify(counter_sil, grid));
    masks.affected.role = MaskRole::AffectedUnion;

    masks.quadmask = compose_quadmask(masks.object, masks.affected);
    masks.trimask = compose_trimask(masks.object);
    masks.needs_second_pass = needs_second_pass_from_pair(pair, spec, config);
    return masks;
}

}  // namespace voidforge
