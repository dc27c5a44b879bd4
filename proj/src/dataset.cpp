#include "voidforge/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>

#include "voidforge/errors.hpp"
#include "voidforge/image.hpp"
#include "voidforge/rng.hpp"

namespace voidforge {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kNoiseSeedTag = 0x6e6f'6973ull;  // noise stream id

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32_le(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32_le(out, bits);
}

float get_f32_le(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32_le(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string frame_file(const std::string& stem, int t, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem.c_str(), t, ext);
    return buf;
}

std::string expand_pattern(const std::string& pattern, int t) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern.c_str(), t);
    return buf;
}

std::string scene_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%06d", index);
    return buf;
}

}  // namespace

// --- flow format -------------------------------------------------------------

std::vector<std::uint8_t> encode_flow(const FlowField& flow) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + static_cast<std::size_t>(flow.width) * flow.height * 9);
    out.insert(out.end(), {'V', 'F', 'L', 'O'});
    put_u32_le(out, 1);
    put_u32_le(out, static_cast<std::uint32_t>(flow.width));
    put_u32_le(out, static_cast<std::uint32_t>(flow.height));
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            const std::size_t i = flow.index(x, y);
            put_f32_le(out, flow.u[i]);
            put_f32_le(out, flow.v[i]);
            out.push_back(flow.valid[i] ? 1 : 0);
        }
    return out;
}

FlowField decode_flow(const std::uint8_t* bytes, std::size_t size) {
    if (size < 4 || std::memcmp(bytes, "VFLO", 4) != 0) throw BadMagic("flow: bad magic");
    if (size < 16) throw Truncated("flow: truncated at byte " + std::to_string(size));
    const std::uint32_t version = get_u32_le(bytes + 4);
    if (version != 1) throw IoError("flow: unsupported version " + std::to_string(version));
    const int w = static_cast<int>(get_u32_le(bytes + 8));
    const int h = static_cast<int>(get_u32_le(bytes + 12));
    const std::size_t expected = 16 + static_cast<std::size_t>(w) * h * 9;
    if (size < expected) throw Truncated("flow: truncated at byte " + std::to_string(size) +
                                         ", expected " + std::to_string(expected));

    FlowField flow;
    flow.width = w;
    flow.height = h;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    flow.u.resize(n);
    flow.v.resize(n);
    flow.valid.resize(n);
    const std::uint8_t* p = bytes + 16;
    for (std::size_t i = 0; i < n; ++i) {
        flow.u[i] = get_f32_le(p);
        flow.v[i] = get_f32_le(p + 4);
        flow.valid[i] = p[8];
        p += 9;
    }
    return flow;
}

void write_flow(const fs::path& path, const FlowField& flow) {
    const auto bytes = encode_flow(flow);
    write_file_bytes(path, bytes.data(), bytes.size());
}

FlowField read_flow(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_flow(bytes.data(), bytes.size());
}

// --- noise format -------------------------------------------------------------

void write_noise(const fs::path& path, const NoiseVolume& volume) {
    std::vector<std::uint8_t> out;
    out.reserve(24 + volume.data.size() * 4);
    out.insert(out.end(), {'V', 'N', 'S', 'E'});
    put_u32_le(out, 1);
    put_u32_le(out, static_cast<std::uint32_t>(volume.frames));
    put_u32_le(out, static_cast<std::uint32_t>(volume.width));
    put_u32_le(out, static_cast<std::uint32_t>(volume.height));
    put_u32_le(out, static_cast<std::uint32_t>(volume.channels));
    for (const float v : volume.data) put_f32_le(out, v);
    write_file_bytes(path, out.data(), out.size());
}

NoiseVolume read_noise(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "VNSE", 4) != 0)
        throw BadMagic("noise: bad magic");
    if (bytes.size() < 24) throw Truncated("noise: truncated at byte " + std::to_string(bytes.size()));
    if (get_u32_le(bytes.data() + 4) != 1) throw IoError("noise: unsupported version");

    NoiseVolume volume;
    volume.frames = static_cast<int>(get_u32_le(bytes.data() + 8));
    volume.width = static_cast<int>(get_u32_le(bytes.data() + 12));
    volume.height = static_cast<int>(get_u32_le(bytes.data() + 16));
    volume.channels = static_cast<int>(get_u32_le(bytes.data() + 20));
    const std::size_t count = static_cast<std::size_t>(volume.frames) * volume.width *
                              volume.height * volume.channels;
    if (bytes.size() < 24 + count * 4)
        throw Truncated("noise: truncated at byte " + std::to_string(bytes.size()) + ", expected " +
                        std::to_string(24 + count * 4));
    volume.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) volume.data[i] = get_f32_le(bytes.data() + 24 + i * 4);
    return volume;
}

// --- metrics -------------------------------------------------------------------

double psnr(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size() || a.empty()) throw ShapeMismatch("psnr: size mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrInfinity;
    return 10.0 * std::log10(1.0 / mse);
}

double psnr(const FramePacket& a, const FramePacket& b) {
    return psnr(std::span<const float>(a.rgb), std::span<const float>(b.rgb));
}

double psnr(std::span<const FramePacket> a, std::span<const FramePacket> b) {
    if (a.size() != b.size() || a.empty()) throw ShapeMismatch("psnr: sequence length mismatch");
    double mse = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].rgb.size() != b[t].rgb.size()) throw ShapeMismatch("psnr: frame size mismatch");
        for (std::size_t i = 0; i < a[t].rgb.size(); ++i) {
            const double d = static_cast<double>(a[t].rgb[i]) - b[t].rgb[i];
            mse += d * d;
        }
        count += a[t].rgb.size();
    }
    mse /= static_cast<double>(count);
    if (mse == 0.0) return kPsnrInfinity;
    return 10.0 * std::log10(1.0 / mse);
}

double mask_iou(const BinaryMaskSeq& a, const BinaryMaskSeq& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("mask_iou: shape mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool va = a.data[i] != 0, vb = b.data[i] != 0;
        inter += va && vb;
        uni += va || vb;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// --- image conversions -----------------------------------------------------------

ImageU8 rgb_to_image(const FramePacket& packet) {
    ImageU8 img(packet.width, packet.height, 3);
    for (std::size_t i = 0; i < packet.rgb.size(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, packet.rgb[i]));
        img.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

ImageU8 instance_to_image(const FramePacket& packet) {
    ImageU8 img(packet.width, packet.height, 1);
    for (std::size_t i = 0; i < packet.instance.size(); ++i) {
        if (packet.instance[i] < 0 || packet.instance[i] > 255)
            throw IoError("instance id out of 8-bit range");
        img.data[i] = static_cast<std::uint8_t>(packet.instance[i]);
    }
    return img;
}

ImageU8 shadow_to_image(const FramePacket& packet) {
    ImageU8 img(packet.width, packet.height, 1);
    for (std::size_t i = 0; i < packet.shadow.size(); ++i)
        img.data[i] = packet.shadow[i] ? 255 : 0;
    return img;
}

ImageU8 quadmask_to_image(const QuadMaskSeq& quad, int frame) {
    ImageU8 img(quad.width, quad.height, 1);
    const std::size_t n = static_cast<std::size_t>(quad.width) * quad.height;
    std::copy_n(quad.labels.begin() + n * frame, n, img.data.begin());
    return img;
}

ImageU8 mask_to_image(const BinaryMaskSeq& mask, int frame) {
    ImageU8 img(mask.width, mask.height, 1);
    const std::size_t n = static_cast<std::size_t>(mask.width) * mask.height;
    for (std::size_t i = 0; i < n; ++i)
        img.data[i] = mask.data[n * frame + i] ? 255 : 0;
    return img;
}

BinaryMaskSeq masks_from_images(std::span<const ImageU8> images, MaskRole role) {
    if (images.empty()) throw ShapeMismatch("masks_from_images: empty sequence");
    BinaryMaskSeq mask(static_cast<int>(images.size()), images[0].width, images[0].height, role);
    for (std::size_t t = 0; t < images.size(); ++t) {
        if (images[t].width != mask.width || images[t].height != mask.height ||
            images[t].channels != 1)
            throw ShapeMismatch("masks_from_images: image shape varies");
        const std::size_t n = static_cast<std::size_t>(mask.width) * mask.height;
        for (std::size_t i = 0; i < n; ++i) mask.data[n * t + i] = images[t].data[i] != 0;
    }
    return mask;
}

// --- manifest ----------------------------------------------------------------

nlohmann::ordered_json manifest_record_to_json(const ManifestRecord& r) {
    nlohmann::ordered_json j;
    j["schema"] = kManifestSchema;
    j["scene_index"] = r.scene_index;
    j["scene_seed"] = r.scene_seed;
    j["template"] = r.template_name;
    j["removed_ids"] = r.removed_ids;
    j["affected_ids"] = r.affected_ids;
    if (r.first_divergence_frame)
        j["first_divergence_frame"] = *r.first_divergence_frame;
    else
        j["first_divergence_frame"] = nullptr;
    j["needs_second_pass"] = r.needs_second_pass;
    j["frames"] = r.frames;
    j["resolution"] = {r.width, r.height};
    j["grid"] = r.grid;
    nlohmann::ordered_json paths;
    for (const auto& [key, value] : r.paths) paths[key] = value;
    j["paths"] = std::move(paths);
    return j;
}

ManifestRecord manifest_record_from_json(const nlohmann::json& j) {
    if (j.at("schema").get<std::string>() != kManifestSchema)
        throw IoError("manifest: unexpected schema");
    ManifestRecord r;
    r.scene_index = j.at("scene_index").get<int>();
    r.scene_seed = j.at("scene_seed").get<std::uint64_t>();
    r.template_name = j.at("template").get<std::string>();
    r.removed_ids = j.at("removed_ids").get<std::vector<int>>();
    r.affected_ids = j.at("affected_ids").get<std::vector<int>>();
    if (!j.at("first_divergence_frame").is_null())
        r.first_divergence_frame = j.at("first_divergence_frame").get<int>();
    r.needs_second_pass = j.at("needs_second_pass").get<bool>();
    r.frames = j.at("frames").get<int>();
    r.width = j.at("resolution").at(0).get<int>();
    r.height = j.at("resolution").at(1).get<int>();
    r.grid = j.at("grid").get<int>();
    for (const auto& [key, value] : j.at("paths").items())
        r.paths[key] = value.get<std::string>();
    return r;
}

std::vector<ManifestRecord> read_manifest(const fs::path& root) {
    const fs::path manifest = root / "manifest.jsonl";
    std::ifstream in(manifest);
    if (!in) throw IoError("MissingManifest: " + manifest.string());
    std::vector<ManifestRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(manifest_record_from_json(nlohmann::json::parse(line)));
    }
    return records;
}

ManifestWriter::ManifestWriter(fs::path root, int first_index)
    : manifest_path_(root / "manifest.jsonl"), next_index_(first_index) {
    std::ofstream out(manifest_path_, std::ios::trunc);
    if (!out) throw IoError("cannot create manifest: " + manifest_path_.string());
}

void ManifestWriter::add(const ManifestRecord& record) {
    std::lock_guard<std::mutex> lock(mutex_);
    pending_[record.scene_index] = manifest_record_to_json(record).dump();
    while (!pending_.empty() && pending_.begin()->first == next_index_) {
        std::ofstream out(manifest_path_, std::ios::app);
        if (!out) throw IoError("cannot append manifest: " + manifest_path_.string());
        out << pending_.begin()->second << "\n";
        pending_.erase(pending_.begin());
        ++next_index_;
    }
}

void ManifestWriter::finish() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!pending_.empty())
        throw ConsistencyError("manifest writer finished with a scene-index hole before " +
                               std::to_string(pending_.begin()->first));
}

// --- trajectory json -----------------------------------------------------------

namespace {

nlohmann::ordered_json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 vec_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

nlohmann::ordered_json trajectory_to_json(const Trajectory& traj) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json states = nlohmann::ordered_json::array();
    for (const auto& frame : traj.states) {
        nlohmann::ordered_json jf = nlohmann::ordered_json::array();
        for (const BodyState& s : frame) {
            nlohmann::ordered_json js;
            js["id"] = s.id;
            js["position"] = vec_json(s.position);
            js["velocity"] = vec_json(s.velocity);
            js["alive"] = s.alive;
            jf.push_back(std::move(js));
        }
        states.push_back(std::move(jf));
    }
    j["states"] = std::move(states);
    nlohmann::ordered_json events = nlohmann::ordered_json::array();
    for (const ContactEvent& e : traj.contact_events)
        events.push_back({e.frame, e.id_a, e.id_b, e.normal.x, e.normal.y, e.normal.z, e.impulse});
    j["contact_events"] = std::move(events);
    return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j, std::uint64_t scene_seed, int frames,
                                double frame_dt) {
    Trajectory traj;
    traj.scene_seed = scene_seed;
    traj.frames = frames;
    traj.frame_dt = frame_dt;
    for (const auto& jf : j.at("states")) {
        std::vector<BodyState> frame;
        for (const auto& js : jf) {
            BodyState s;
            s.id = js.at("id").get<int>();
            s.position = vec_from_json(js.at("position"));
            s.velocity = vec_from_json(js.at("velocity"));
            s.alive = js.at("alive").get<bool>();
            frame.push_back(s);
        }
        traj.states.push_back(std::move(frame));
    }
    for (const auto& je : j.at("contact_events")) {
        ContactEvent e;
        e.frame = je.at(0).get<int>();
        e.id_a = je.at(1).get<int>();
        e.id_b = je.at(2).get<int>();
        e.normal = {je.at(3).get<double>(), je.at(4).get<double>(), je.at(5).get<double>()};
        e.impulse = je.at(6).get<double>();
        traj.contact_events.push_back(e);
    }
    return traj;
}

}  // namespace

nlohmann::ordered_json trajectory_pair_to_json(const CounterfactualPair& pair) {
    nlohmann::ordered_json j;
    j["schema"] = kTrajectorySchema;
    j["scene_seed"] = pair.factual.scene_seed;
    j["frames"] = pair.factual.frames;
    j["frame_dt"] = pair.factual.frame_dt;
    j["removed_ids"] = pair.removed_ids;
    j["affected_ids"] = pair.affected_ids;
    if (pair.first_divergence_frame)
        j["first_divergence_frame"] = *pair.first_divergence_frame;
    else
        j["first_divergence_frame"] = nullptr;
    j["factual"] = trajectory_to_json(pair.factual);
    j["counterfactual"] = trajectory_to_json(pair.counterfactual);
    return j;
}

CounterfactualPair trajectory_pair_from_json(const nlohmann::json& j) {
    if (j.at("schema").get<std::string>() != kTrajectorySchema)
        throw IoError("trajectory: unexpected schema");
    CounterfactualPair pair;
    const std::uint64_t seed = j.at("scene_seed").get<std::uint64_t>();
    const int frames = j.at("frames").get<int>();
    const double frame_dt = j.at("frame_dt").get<double>();
    pair.removed_ids = j.at("removed_ids").get<std::vector<int>>();
    pair.affected_ids = j.at("affected_ids").get<std::vector<int>>();
    if (!j.at("first_divergence_frame").is_null())
        pair.first_divergence_frame = j.at("first_divergence_frame").get<int>();
    pair.factual = trajectory_from_json(j.at("factual"), seed, frames, frame_dt);
    pair.counterfactual = trajectory_from_json(j.at("counterfactual"), seed, frames, frame_dt);
    return pair;
}

// --- export ----------------------------------------------------------------

ManifestRecord export_pair(const SceneSpec& spec, const CounterfactualPair& pair,
                           const PairRenders& renders, const PairMasks& masks,
                           const NoiseVolume& noise, const fs::path& root, int scene_index,
                           ManifestWriter& writer) {
    const int T = spec.frames;
    if (pair.factual.frames != T || pair.counterfactual.frames != T ||
        static_cast<int>(renders.factual.packets.size()) != T ||
        static_cast<int>(renders.counterfactual.packets.size()) != T ||
        static_cast<int>(renders.factual.flows.size()) != T - 1 ||
        static_cast<int>(renders.counterfactual.flows.size()) != T - 1 ||
        masks.quadmask.frames != T || masks.trimask.frames != T || noise.frames != T)
        throw ConsistencyError("export_pair: frame counts disagree");

    const std::string dir_name = scene_dir_name(scene_index);
    const fs::path tmp = root / (".tmp-" + dir_name);
    const fs::path target = root / dir_name;
    if (fs::exists(target)) throw IoError("export target already exists: " + target.string());
    fs::remove_all(tmp);
    fs::create_directories(tmp / "factual");
    fs::create_directories(tmp / "counterfactual");

    auto write_variant = [&](const RenderedClip& clip, const char* variant) {
        for (int t = 0; t < T; ++t) {
            const FramePacket& p = clip.packets[t];
            write_png(tmp / variant / frame_file("rgb", t, "png"), rgb_to_image(p));
            write_png(tmp / variant / frame_file("instance", t, "png"), instance_to_image(p));
            write_png(tmp / variant / frame_file("shadow", t, "png"), shadow_to_image(p));
        }
        for (int t = 0; t < T - 1; ++t)
            write_flow(tmp / variant / frame_file("flow", t, "vflo"), clip.flows[t]);
    };
    write_variant(renders.factual, "factual");
    write_variant(renders.counterfactual, "counterfactual");

    for (int t = 0; t < T; ++t) {
        write_png(tmp / frame_file("quadmask", t, "png"), quadmask_to_image(masks.quadmask, t));
        write_png(tmp / frame_file("trimask", t, "png"), quadmask_to_image(masks.trimask, t));
    }
    write_noise(tmp / "noise.vnse", noise);

    {
        std::ofstream out(tmp / "scene.json");
        out << scene_to_string(spec);
        if (!out) throw IoError("failed writing scene.json");
    }
    {
        std::ofstream out(tmp / "trajectory.json");
        out << trajectory_pair_to_json(pair).dump(2) << "\n";
        if (!out) throw IoError("failed writing trajectory.json");
    }

    fs::rename(tmp, target);

    ManifestRecord record;
    record.scene_seed = spec.scene_seed;
    record.scene_index = scene_index;
    record.template_name = spec.template_name;
    record.removed_ids = pair.removed_ids;
    record.affected_ids = pair.affected_ids;
    record.first_divergence_frame = pair.first_divergence_frame;
    record.needs_second_pass = masks.needs_second_pass;
    record.frames = T;
    record.width = spec.width;
    record.height = spec.height;
    record.grid = masks.grid;
    record.paths["scene"] = dir_name + "/scene.json";
    record.paths["trajectory"] = dir_name + "/trajectory.json";
    record.paths["factual_rgb"] = dir_name + "/factual/rgb_%04d.png";
    record.paths["factual_instance"] = dir_name + "/factual/instance_%04d.png";
    record.paths["factual_shadow"] = dir_name + "/factual/shadow_%04d.png";
    record.paths["factual_flow"] = dir_name + "/factual/flow_%04d.vflo";
    record.paths["counterfactual_rgb"] = dir_name + "/counterfactual/rgb_%04d.png";
    record.paths["counterfactual_instance"] = dir_name + "/counterfactual/instance_%04d.png";
    record.paths["counterfactual_shadow"] = dir_name + "/counterfactual/shadow_%04d.png";
    record.paths["counterfactual_flow"] = dir_name + "/counterfactual/flow_%04d.vflo";
    record.paths["quadmask"] = dir_name + "/quadmask_%04d.png";
    record.paths["trimask"] = dir_name + "/trimask_%04d.png";
    record.paths["noise"] = dir_name + "/noise.vnse";

    writer.add(record);
    return record;
}

// --- pipeline ----------------------------------------------------------------

PairArtifacts build_pair(std::uint64_t master_seed, int scene_index, const SamplerParams& params,
                         int grid, int noise_k, int noise_channels) {
    PairArtifacts artifacts;
    artifacts.spec = sample_scene(master_seed, static_cast<std::uint64_t>(scene_index), params);
    artifacts.pair = simulate_counterfactual(artifacts.spec);
    artifacts.renders = render_pair(artifacts.pair, artifacts.spec);
    artifacts.masks = build_pair_masks(artifacts.pair, artifacts.renders, artifacts.spec, grid);
    // the noise volume aligns with the training target, i.e. the counterfactual clip
    artifacts.noise = warp_volume(artifacts.renders.counterfactual.flows,
                                  mix64(artifacts.spec.scene_seed, kNoiseSeedTag),
                                  artifacts.spec.width, artifacts.spec.height, noise_channels,
                                  noise_k);
    return artifacts;
}

GenerateSummary generate_dataset(const GenerateOptions& options) {
    if (options.count < 0) throw RangeError("generate: count must be >= 0");
    if (options.jobs < 1) throw RangeError("generate: jobs must be >= 1");
    if (options.width % options.noise_k != 0 || options.height % options.noise_k != 0)
        throw IndivisibleResolution("generate: noise downsample must divide the resolution");

    fs::create_directories(options.out);
    ManifestWriter writer(options.out, 0);

    SamplerParams params;
    params.width = options.width;
    params.height = options.height;
    params.frames = options.frames;
    params.template_weights = options.template_mix;

    std::atomic<int> next_index{0};
    std::atomic<int> divergent{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&]() {
        while (!failed.load()) {
            const int index = next_index.fetch_add(1);
            if (index >= options.count) break;
            try {
                const PairArtifacts a = build_pair(options.seed, index, params, options.grid,
                                                   options.noise_k, options.noise_channels);
                export_pair(a.spec, a.pair, a.renders, a.masks, a.noise, options.out, index,
                            writer);
                if (a.pair.first_divergence_frame) divergent.fetch_add(1);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                break;
            }
        }
    };

    if (options.jobs == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < options.jobs; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    writer.finish();

    GenerateSummary summary;
    summary.pairs = options.count;
    summary.divergent = divergent.load();
    return summary;
}

// --- stats ----------------------------------------------------------------

DatasetStats compute_stats(const fs::path& root) {
    const std::vector<ManifestRecord> records = read_manifest(root);
    DatasetStats stats;
    stats.pair_count = static_cast<int>(records.size());
    stats.label_histogram = {{"black", 0}, {"dark_grey", 0}, {"light_grey", 0}, {"white", 0}};

    int divergent = 0;
    double cell_fraction_sum = 0.0;
    for (const ManifestRecord& r : records) {
        if (r.first_divergence_frame) ++divergent;
        stats.template_counts[r.template_name] += 1;

        const int grid = r.grid;
        const int cw = (r.width + grid - 1) / grid;
        const int ch = (r.height + grid - 1) / grid;
        double record_cells = 0.0;
        for (int t = 0; t < r.frames; ++t) {
            const ImageU8 quad =
                read_png(root / expand_pattern(r.paths.at("quadmask"), t));
            std::vector<std::uint8_t> cell_hit(static_cast<std::size_t>(grid) * grid, 0);
            for (int y = 0; y < quad.height; ++y)
                for (int x = 0; x < quad.width; ++x) {
                    const std::uint8_t v = quad.at(x, y);
                    switch (v) {
                        case 0: ++stats.label_histogram["black"]; break;
                        case 85: ++stats.label_histogram["dark_grey"]; break;
                        case 170: ++stats.label_histogram["light_grey"]; break;
                        case 255: ++stats.label_histogram["white"]; break;
                        default: break;  // validation flags these
                    }
                    if (v == 85 || v == 170) {
                        const int cxi = std::min(x / cw, grid - 1);
                        const int cyi = std::min(y / ch, grid - 1);
                        cell_hit[static_cast<std::size_t>(cyi) * grid + cxi] = 1;
                    }
                }
            std::size_t hits = 0;
            for (const auto h : cell_hit) hits += h;
            record_cells += static_cast<double>(hits) / (static_cast<double>(grid) * grid);
        }
        cell_fraction_sum += record_cells / r.frames;
    }
    if (!records.empty()) {
        stats.divergent_fraction = static_cast<double>(divergent) / records.size();
        stats.mean_affected_cell_fraction = cell_fraction_sum / records.size();
    }
    return stats;
}

nlohmann::ordered_json stats_to_json(const DatasetStats& stats) {
    nlohmann::ordered_json j;
    j["pair_count"] = stats.pair_count;
    j["divergent_fraction"] = stats.divergent_fraction;
    j["template_counts"] = stats.template_counts;
    j["label_histogram"] = stats.label_histogram;
    j["mean_affected_cell_fraction"] = stats.mean_affected_cell_fraction;
    return j;
}

// --- validation ----------------------------------------------------------------

std::optional<double> flow_reconstruction_psnr(const ImageU8& rgb_t, const ImageU8& rgb_t1,
                                               const ImageU8& instance_t, const ImageU8& instance_t1,
                                               const ImageU8& shadow_t, const ImageU8& shadow_t1,
                                               const FlowField& flow) {
    const int w = rgb_t.width, h = rgb_t.height;
    if (rgb_t1.width != w || rgb_t1.height != h || flow.width != w || flow.height != h ||
        instance_t.width != w || shadow_t.width != w)
        throw ShapeMismatch("flow_reconstruction_psnr: shape mismatch");
    (void)instance_t1;
    (void)shadow_t1;

    double mse = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = flow.index(x, y);
            if (!flow.valid[i]) continue;
            const double sx = x + 0.5 + flow.u[i];
            const double sy = y + 0.5 + flow.v[i];
            const int x0 = static_cast<int>(std::floor(sx - 0.5));
            const int y0 = static_cast<int>(std::floor(sy - 0.5));
            if (x0 < 0 || y0 < 0 || x0 + 1 >= w || y0 + 1 >= h) continue;

            // the bilinear footprint must stay on the same surface as the
            // source pixel: same instance id, same shadow bit
            const int id = instance_t.at(x, y);
            const std::uint8_t sh = shadow_t.at(x, y);
            bool same_surface = true;
            for (int dy = 0; dy <= 1 && same_surface; ++dy)
                for (int dx = 0; dx <= 1; ++dx)
                    if (instance_t1.at(x0 + dx, y0 + dy) != id ||
                        shadow_t1.at(x0 + dx, y0 + dy) != sh) {
                        same_surface = false;
                        break;
                    }
            if (!same_surface) continue;

            const double fx = sx - 0.5 - x0;
            const double fy = sy - 0.5 - y0;
            for (int c = 0; c < 3; ++c) {
                const double v00 = rgb_t1.at(x0, y0, c) / 255.0;
                const double v10 = rgb_t1.at(x0 + 1, y0, c) / 255.0;
                const double v01 = rgb_t1.at(x0, y0 + 1, c) / 255.0;
                const double v11 = rgb_t1.at(x0 + 1, y0 + 1, c) / 255.0;
                const double interp = v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy) +
                                      v01 * (1 - fx) * fy + v11 * fx * fy;
                const double d = interp - rgb_t.at(x, y, c) / 255.0;
                mse += d * d;
            }
            count += 3;
        }
    if (count == 0) return std::nullopt;
    mse /= static_cast<double>(count);
    if (mse == 0.0) return kPsnrInfinity;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

struct VariantImages {
    std::vector<ImageU8> rgb, instance, shadow;
    std::vector<FlowField> flows;
};

VariantImages load_variant(const fs::path& root, const ManifestRecord& r, const char* prefix) {
    VariantImages v;
    const std::string key{prefix};
    for (int t = 0; t < r.frames; ++t) {
        v.rgb.push_back(read_png(root / expand_pattern(r.paths.at(key + "_rgb"), t)));
        v.instance.push_back(read_png(root / expand_pattern(r.paths.at(key + "_instance"), t)));
        v.shadow.push_back(read_png(root / expand_pattern(r.paths.at(key + "_shadow"), t)));
    }
    for (int t = 0; t < r.frames - 1; ++t)
        v.flows.push_back(read_flow(root / expand_pattern(r.paths.at(key + "_flow"), t)));
    return v;
}

void validate_record(const fs::path& root, const ManifestRecord& r,
                     std::vector<Violation>& violations) {
    auto add = [&](const char* check, std::string detail) {
        violations.push_back({r.scene_index, check, std::move(detail)});
    };

    // scene spec parses and matches the record
    SceneSpec spec;
    try {
        const auto bytes = read_file_bytes(root / r.paths.at("scene"));
        spec = scene_from_string(std::string(bytes.begin(), bytes.end()));
        if (spec.frames != r.frames || spec.width != r.width || spec.height != r.height)
            add("ConsistencyViolation", "scene.json disagrees with the manifest record");
    } catch (const std::exception& e) {
        add("SchemaViolation", std::string("scene.json: ") + e.what());
        return;
    }

    // stored trajectories: prefix property and removed-contact exclusion
    try {
        const auto bytes = read_file_bytes(root / r.paths.at("trajectory"));
        const CounterfactualPair pair =
            trajectory_pair_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
        if (pair.factual.frames != r.frames)
            add("ConsistencyViolation", "trajectory frame count mismatch");
        const int until = pair.first_divergence_frame ? *pair.first_divergence_frame
                                                      : pair.factual.frames;
        for (int t = 0; t < until; ++t)
            for (std::size_t b = 0; b < pair.factual.states[t].size(); ++b) {
                if (!pair.counterfactual.states[t][b].alive) continue;
                const BodyState& f = pair.factual.states[t][b];
                const BodyState& c = pair.counterfactual.states[t][b];
                if (!(f.position == c.position) || !(f.velocity == c.velocity)) {
                    add("PrefixViolation",
                        "body " + std::to_string(f.id) + " differs at frame " + std::to_string(t) +
                            " before divergence frame " + std::to_string(until));
                    t = until;
                    break;
                }
            }
        for (const ContactEvent& e : pair.counterfactual.contact_events)
            for (int id : pair.removed_ids)
                if (e.id_a == id || e.id_b == id)
                    add("RemovedContactViolation",
                        "removed id " + std::to_string(id) + " appears in counterfactual events");
    } catch (const Error& e) {
        add("SchemaViolation", std::string("trajectory.json: ") + e.what());
    }

    VariantImages factual, counterfactual;
    try {
        factual = load_variant(root, r, "factual");
        counterfactual = load_variant(root, r, "counterfactual");
    } catch (const std::exception& e) {
        add("IoViolation", e.what());
        return;
    }

    for (int t = 0; t < r.frames; ++t)
        if (factual.rgb[t].width != r.width || factual.rgb[t].height != r.height ||
            counterfactual.rgb[t].width != r.width) {
            add("ConsistencyViolation", "frame resolution disagrees with the manifest");
            return;
        }

    // quadmask encoding, partition, and soundness against the rendered pair
    for (int t = 0; t < r.frames; ++t) {
        ImageU8 quad;
        try {
            quad = read_png(root / expand_pattern(r.paths.at("quadmask"), t));
        } catch (const std::exception& e) {
            add("IoViolation", e.what());
            return;
        }
        if (quad.width != r.width || quad.height != r.height || quad.channels != 1) {
            add("EncodingViolation", "quadmask frame " + std::to_string(t) + " has wrong shape");
            continue;
        }
        bool encoding_ok = true;
        for (std::size_t i = 0; i < quad.data.size() && encoding_ok; ++i) {
            const std::uint8_t v = quad.data[i];
            if (v != 0 && v != 85 && v != 170 && v != 255) {
                add("EncodingViolation", "quadmask frame " + std::to_string(t) + " has value " +
                                             std::to_string(v));
                encoding_ok = false;
            }
        }
        const ImageU8& f = factual.rgb[t];
        const ImageU8& c = counterfactual.rgb[t];
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x) {
                bool differs = false;
                for (int ch = 0; ch < 3; ++ch)
                    if (f.at(x, y, ch) != c.at(x, y, ch)) differs = true;
                if (differs && quad.at(x, y) == 255) {
                    add("SoundnessViolation", "changed pixel labeled White at frame " +
                                                  std::to_string(t) + ", (" + std::to_string(x) +
                                                  ", " + std::to_string(y) + ")");
                    y = r.height;
                    break;
                }
            }
    }

    // trimask restricted to {Black, LightGrey}
    for (int t = 0; t < r.frames; ++t) {
        ImageU8 tri;
        try {
            tri = read_png(root / expand_pattern(r.paths.at("trimask"), t));
        } catch (const std::exception& e) {
            add("IoViolation", e.what());
            return;
        }
        for (std::size_t i = 0; i < tri.data.size(); ++i)
            if (tri.data[i] != 0 && tri.data[i] != 170) {
                add("EncodingViolation", "trimask frame " + std::to_string(t) +
                                             " has value " + std::to_string(tri.data[i]));
                break;
            }
    }

    // flow files reconstruct the previous frame
    auto check_flow = [&](const VariantImages& v, const char* name) {
        for (int t = 0; t < r.frames - 1; ++t) {
            const auto score = flow_reconstruction_psnr(v.rgb[t], v.rgb[t + 1], v.instance[t],
                                                        v.instance[t + 1], v.shadow[t],
                                                        v.shadow[t + 1], v.flows[t]);
            if (score && *score < kFlowFidelityThresholdDb)
                add("FlowFidelityViolation",
                    std::string(name) + " flow " + std::to_string(t) + " reconstructs at " +
                        std::to_string(*score) + " dB");
        }
    };
    check_flow(factual, "factual");
    check_flow(counterfactual, "counterfactual");

    // noise volume header consistency
    try {
        const NoiseVolume noise = read_noise(root / r.paths.at("noise"));
        if (noise.frames != r.frames)
            add("ConsistencyViolation", "noise volume frame count mismatch");
        if (noise.width <= 0 || r.width % noise.width != 0)
            add("ConsistencyViolation", "noise volume resolution is not a divisor of the render");
    } catch (const Error& e) {
        add("IoViolation", std::string("noise.vnse: ") + e.what());
    }
}

}  // namespace

ValidationReport validate_dataset(const fs::path& root) {
    ValidationReport report;
    std::vector<ManifestRecord> records;
    try {
        records = read_manifest(root);
    } catch (const IoError&) {
        report.missing_manifest = true;
        report.violations.push_back({-1, "MissingManifest", (root / "manifest.jsonl").string()});
        return report;
    }
    for (const ManifestRecord& r : records) {
        validate_record(root, r, report.violations);
        ++report.records_checked;
    }
    return report;
}

nlohmann::ordered_json report_to_json(const ValidationReport& report) {
    nlohmann::ordered_json j;
    j["records_checked"] = report.records_checked;
    j["ok"] = report.ok();
    nlohmann::ordered_json violations = nlohmann::ordered_json::array();
    for (const Violation& v : report.violations) {
        nlohmann::ordered_json jv;
        jv["scene_index"] = v.scene_index;
        jv["check"] = v.check;
        jv["detail"] = v.detail;
        violations.push_back(std::move(jv));
    }
    j["violations"] = std::move(violations);
    return j;
}

}  // namespace voidforge
