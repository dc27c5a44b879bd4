#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voidforge/masks.hpp"
#include "voidforge/noisewarp.hpp"
#include "voidforge/physics.hpp"
#include "voidforge/render.hpp"
#include "voidforge/scene.hpp"

#include "json.hpp"

namespace voidforge {

inline constexpr const char* kManifestSchema = "void-forge/manifest/1";
inline constexpr const char* kTrajectorySchema = "void-forge/trajectory/1";

// --- flow / noise file formats --------------------------------------------

// "VFLO" | u32 version=1 | u32 w | u32 h | h*w x (f32 u, f32 v, u8 valid), LE
void write_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_flow(const FlowField& flow);
FlowField decode_flow(const std::uint8_t* bytes, std::size_t size);

// "VNSE" | u32 version=1 | u32 T | u32 w | u32 h | u32 C | f32 data, LE,
// row-major frame-major ([t][y][x][c])
void write_noise(const std::filesystem::path& path, const NoiseVolume& volume);
NoiseVolume read_noise(const std::filesystem::path& path);

// --- metrics ----------------------------------------------------------------

inline constexpr double kPsnrInfinity = 99.0;  // serialized sentinel for MSE = 0

double psnr(std::span<const float> a, std::span<const float> b);
double psnr(const FramePacket& a, const FramePacket& b);
double psnr(std::span<const FramePacket> a, std::span<const FramePacket> b);

double mask_iou(const BinaryMaskSeq& a, const BinaryMaskSeq& b);

// --- manifest ----------------------------------------------------------------

struct ManifestRecord {
    std::uint64_t scene_seed = 0;
    int scene_index = 0;
    std::string template_name;
    std::vector<int> removed_ids;
    std::vector<int> affected_ids;
    std::optional<int> first_divergence_frame;
    bool needs_second_pass = false;
    int frames = 0;
    int width = 0;
    int height = 0;
    int grid = 8;
    // printf-style patterns (%04d frame index), relative to the dataset root
    std::map<std::string, std::string> paths;
};

nlohmann::ordered_json manifest_record_to_json(const ManifestRecord& record);
ManifestRecord manifest_record_from_json(const nlohmann::json& j);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& root);

// Serialized appender that releases records in scene-index order, so the
// manifest bytes do not depend on worker completion order.
class ManifestWriter {
  public:
    ManifestWriter(std::filesystem::path root, int first_index);
    void add(const ManifestRecord& record);
    void finish();  // throws if records are still buffered (a hole)

  private:
    std::filesystem::path manifest_path_;
    std::mutex mutex_;
    int next_index_;
    std::map<int, std::string> pending_;
};

// --- export ----------------------------------------------------------------

// Writes one scene directory (PNG frames, masks, flows, noise, spec,
// trajectories) atomically via a temp dir + rename, then appends the record
// through the writer.
ManifestRecord export_pair(const SceneSpec& spec, const CounterfactualPair& pair,
                           const PairRenders& renders, const PairMasks& masks,
                           const NoiseVolume& noise, const std::filesystem::path& root,
                           int scene_index, ManifestWriter& writer);

nlohmann::ordered_json trajectory_pair_to_json(const CounterfactualPair& pair);
CounterfactualPair trajectory_pair_from_json(const nlohmann::json& j);

// --- full pipeline ----------------------------------------------------------

struct PairArtifacts {
    SceneSpec spec;
    CounterfactualPair pair;
    PairRenders renders;
    PairMasks masks;
    NoiseVolume noise;
};

// scene -> simulate -> render -> masks -> warped noise, all in memory
PairArtifacts build_pair(std::uint64_t master_seed, int scene_index, const SamplerParams& params,
                         int grid = 8, int noise_k = 4, int noise_channels = 4);

struct GenerateOptions {
    std::uint64_t seed = 0;
    int count = 1;
    std::filesystem::path out;
    int width = 128;
    int height = 128;
    int frames = 49;
    int grid = 8;
    int jobs = 1;
    std::array<double, 3> template_mix{1.0, 1.0, 1.0};
    int noise_k = 4;
    int noise_channels = 4;
};

struct GenerateSummary {
    int pairs = 0;
    int divergent = 0;
};

GenerateSummary generate_dataset(const GenerateOptions& options);

// --- stats / validation -----------------------------------------------------

struct DatasetStats {
    int pair_count = 0;
    double divergent_fraction = 0.0;
    std::map<std::string, int> template_counts;
    std::map<std::string, std::uint64_t> label_histogram;  // black/dark_grey/light_grey/white
    double mean_affected_cell_fraction = 0.0;
};

DatasetStats compute_stats(const std::filesystem::path& root);
nlohmann::ordered_json stats_to_json(const DatasetStats& stats);

struct Violation {
    int scene_index = -1;
    std::string check;   // e.g. EncodingViolation, SoundnessViolation
    std::string detail;
};

struct ValidationReport {
    int records_checked = 0;
    bool missing_manifest = false;
    std::vector<Violation> violations;
    bool ok() const { return !missing_manifest && violations.empty(); }
};

inline constexpr double kFlowFidelityThresholdDb = 35.0;

ValidationReport validate_dataset(const std::filesystem::path& root);
nlohmann::ordered_json report_to_json(const ValidationReport& report);

// Inverse-warp PSNR of frame t reconstructed from frame t+1 along the flow,
// restricted to valid pixels whose bilinear footprint stays on the same
// surface (same instance, uniform shadow bit). Returns nullopt when no pixel
// qualifies.
std::optional<double> flow_reconstruction_psnr(const ImageU8& rgb_t, const ImageU8& rgb_t1,
                                               const ImageU8& instance_t, const ImageU8& instance_t1,
                                               const ImageU8& shadow_t, const ImageU8& shadow_t1,
                                               const FlowField& flow);

// --- conversions shared by export/validation --------------------------------

ImageU8 rgb_to_image(const FramePacket& packet);
ImageU8 instance_to_image(const FramePacket& packet);
ImageU8 shadow_to_image(const FramePacket& packet);
ImageU8 quadmask_to_image(const QuadMaskSeq& quad, int frame);
ImageU8 mask_to_image(const BinaryMaskSeq& mask, int frame);
BinaryMaskSeq masks_from_images(std::span<const ImageU8> images, MaskRole role);

}  // namespace voidforge
