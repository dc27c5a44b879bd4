#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "voidforge/physics.hpp"
#include "voidforge/render.hpp"
#include "voidforge/scene.hpp"

namespace voidforge {

enum class MaskRole { ObjectMask, AffectedOrig, AffectedCount, AffectedUnion };

struct BinaryMaskSeq {
    int frames = 0;
    int width = 0;
    int height = 0;
    MaskRole role = MaskRole::ObjectMask;
    std::vector<std::uint8_t> data;  // frames*w*h, row-major per frame

    BinaryMaskSeq() = default;
    BinaryMaskSeq(int t, int w, int h, MaskRole r)
        : frames(t), width(w), height(h), role(r),
          data(static_cast<std::size_t>(t) * w * h, 0) {}

    std::size_t index(int t, int x, int y) const {
        return (static_cast<std::size_t>(t) * height + y) * width + x;
    }
    bool at(int t, int x, int y) const { return data[index(t, x, y)] != 0; }
    void set(int t, int x, int y, bool v) { data[index(t, x, y)] = v ? 1 : 0; }
    bool same_shape(const BinaryMaskSeq& o) const {
        return frames == o.frames && width == o.width && height == o.height;
    }
    std::size_t count_set() const;
};

BinaryMaskSeq mask_union(const BinaryMaskSeq& a, const BinaryMaskSeq& b);

// Quadmask labels and their persisted byte encoding.
enum class QuadLabel : std::uint8_t { Black = 0, DarkGrey = 85, LightGrey = 170, White = 255 };

struct QuadMaskSeq {
    int frames = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    QuadMaskSeq() = default;
    QuadMaskSeq(int t, int w, int h)
        : frames(t), width(w), height(h),
          labels(static_cast<std::size_t>(t) * w * h,
                 static_cast<std::uint8_t>(QuadLabel::White)) {}

    std::size_t index(int t, int x, int y) const {
        return (static_cast<std::size_t>(t) * height + y) * width + x;
    }
    QuadLabel at(int t, int x, int y) const { return QuadLabel{labels[index(t, x, y)]}; }
};

// --- mask construction ---------------------------------------------------

// pixel true iff the factual instance id is in removed_ids
BinaryMaskSeq object_mask(std::span<const FramePacket> packets, const std::vector<int>& removed_ids,
                          const SceneSpec& spec);

// union of affected-body silhouettes in both variants plus every pixel whose
// shadow bit differs between them
BinaryMaskSeq affected_pixel_region(std::span<const FramePacket> factual,
                                    std::span<const FramePacket> counterfactual,
                                    const std::vector<int>& affected_ids);

// silhouettes of the given ids in one packet sequence
BinaryMaskSeq instance_silhouettes(std::span<const FramePacket> packets,
                                   const std::vector<int>& ids, MaskRole role);

// a GxG cell is fully set iff it contains at least one set pixel (ceiling
// cell size, edge cells clipped)
BinaryMaskSeq gridify(const BinaryMaskSeq& mask, int cells_per_side);

QuadMaskSeq compose_quadmask(const BinaryMaskSeq& object, const BinaryMaskSeq& affected);
QuadMaskSeq compose_trimask(const BinaryMaskSeq& object);

// --- region reasoner interface -------------------------------------------

struct GridCell {
    int row = 0;
    int col = 0;
    bool operator==(const GridCell&) const = default;
};

struct RegionInference {
    BinaryMaskSeq affected_orig;                       // pixel resolution
    std::vector<std::vector<GridCell>> counterfactual_cells;  // per frame
};

class RegionReasoner {
  public:
    virtual ~RegionReasoner() = default;
    virtual RegionInference infer_affected(std::span<const FramePacket> frames,
                                           const BinaryMaskSeq& object_mask) = 0;
    virtual bool needs_second_pass(std::span<const FramePacket> frames,
                                   const BinaryMaskSeq& object_mask) = 0;
    virtual int grid() const = 0;
};

BinaryMaskSeq cells_to_mask(const std::vector<std::vector<GridCell>>& cells, int grid, int frames,
                            int width, int height);
std::vector<std::vector<GridCell>> mask_to_cells(const BinaryMaskSeq& mask, int grid);

// M_a = affected_orig OR rasterized counterfactual cells
BinaryMaskSeq combine_affected(const RegionInference& inference, int grid, int width, int height);
QuadMaskSeq quadmask_from_reasoner(RegionReasoner& reasoner, std::span<const FramePacket> frames,
                                   const BinaryMaskSeq& object_mask);

// --- second-pass trigger ---------------------------------------------------

struct SecondPassConfig {
    double displacement_factor = 10.0;  // times the body's characteristic size
    int free_fall_window = 6;           // consecutive frames
    double accel_divergence_frac = 0.5; // of g * frame_dt
};

bool needs_second_pass_from_pair(const CounterfactualPair& pair, const SceneSpec& spec,
                                 const SecondPassConfig& config = {});

// --- ground-truth oracle ---------------------------------------------------

// Region reasoner backed by the simulator: affected silhouettes and shadow
// differences stand in for the hosted segmenter/reasoner.
std::unique_ptr<RegionReasoner> ground_truth_reasoner(const CounterfactualPair& pair,
                                                      const PairRenders& renders,
                                                      const SceneSpec& spec, int grid = 8,
                                                      const SecondPassConfig& config = {});

// --- dataset mask bundle ---------------------------------------------------

struct PairMasks {
    BinaryMaskSeq object;         // M_o
    BinaryMaskSeq affected;       // M_a (pixel-res region OR gridified counterfactual)
    QuadMaskSeq quadmask;         // M_q
    QuadMaskSeq trimask;          // ablation baseline
    bool needs_second_pass = false;
    int grid = 8;
};

PairMasks build_pair_masks(const CounterfactualPair& pair, const PairRenders& renders,
                           const SceneSpec& spec, int grid = 8,
                           const SecondPassConfig& config = {});

}  // namespace voidforge
