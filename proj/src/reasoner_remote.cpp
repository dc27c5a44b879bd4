#include "voidforge/reasoner_remote.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "httplib.h"
#include "json.hpp"

#include "voidforge/dataset.hpp"
#include "voidforge/errors.hpp"
#include "voidforge/image.hpp"

namespace voidforge {

namespace {

class RemoteReasoner final : public RegionReasoner {
  public:
    explicit RemoteReasoner(RemoteReasonerConfig config) : config_(std::move(config)) {}

    RegionInference infer_affected(std::span<const FramePacket> frames,
                                   const BinaryMaskSeq& object_mask) override {
        const Response& res = exchange(frames, object_mask);
        RegionInference out;
        out.affected_orig = res.affected_orig;
        out.counterfactual_cells = res.counterfactual_cells;
        return out;
    }

    bool needs_second_pass(std::span<const FramePacket> frames,
                           const BinaryMaskSeq& object_mask) override {
        return exchange(frames, object_mask).needs_second_pass;
    }

    int grid() const override { return config_.grid; }

  private:
    struct Response {
        BinaryMaskSeq affected_orig;
        std::vector<std::vector<GridCell>> counterfactual_cells;
        bool needs_second_pass = false;
    };

    const Response& exchange(std::span<const FramePacket> frames,
                             const BinaryMaskSeq& object_mask) {
        const std::string body = build_request(frames, object_mask);
        if (cache_ && cache_key_ == body) return *cache_;

        httplib::Client client(config_.base_url);
        const auto timeout = std::chrono::microseconds(
            static_cast<long long>(config_.timeout_seconds * 1e6));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Result result = client.Post(kReasonerPath, body, "application/json");
        if (!result) {
            const httplib::Error err = result.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                throw TimeoutError("reasoner request timed out against " + config_.base_url);
            throw TransportError("reasoner request failed against " + config_.base_url + ": " +
                                 httplib::to_string(err));
        }
        if (result->status != 200)
            throw ProtocolError("reasoner returned HTTP " + std::to_string(result->status));

        cache_ = parse_response(result->body, static_cast<int>(frames.size()), object_mask.width,
                                object_mask.height);
        cache_key_ = body;
        return *cache_;
    }

    std::string build_request(std::span<const FramePacket> frames,
                              const BinaryMaskSeq& object_mask) const {
        if (static_cast<int>(frames.size()) != object_mask.frames)
            throw ShapeMismatch("remote reasoner: frames and object mask are not aligned");
        nlohmann::ordered_json j;
        nlohmann::ordered_json frame_list = nlohmann::ordered_json::array();
        for (const FramePacket& p : frames)
            frame_list.push_back(base64_encode(encode_png(rgb_to_image(p))));
        j["frames"] = std::move(frame_list);
        nlohmann::ordered_json mask_list = nlohmann::ordered_json::array();
        for (int t = 0; t < object_mask.frames; ++t)
            mask_list.push_back(base64_encode(encode_png(mask_to_image(object_mask, t))));
        j["object_mask"] = std::move(mask_list);
        j["grid"] = config_.grid;
        return j.dump();
    }

    Response parse_response(const std::string& body, int frames, int width, int height) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("reasoner response is not valid JSON: ") + e.what());
        }
        Response res;
        try {
            // affected_objects is informational; we only require it to be a list
            if (!j.at("affected_objects").is_array())
                throw ProtocolError("affected_objects must be an array");

            const auto& orig = j.at("affected_orig");
            if (static_cast<int>(orig.size()) != frames)
                throw ProtocolError("affected_orig has " + std::to_string(orig.size()) +
                                    " frames, expected " + std::to_string(frames));
            std::vector<ImageU8> images;
            for (int t = 0; t < frames; ++t) {
                ImageU8 img;
                try {
                    img = decode_png(base64_decode(orig.at(t).get<std::string>()));
                } catch (const Error& e) {
                    throw ProtocolError("affected_orig frame " + std::to_string(t) +
                                        " is not a decodable mask: " + e.what());
                }
                if (img.width != width || img.height != height || img.channels != 1)
                    throw ProtocolError("affected_orig frame " + std::to_string(t) +
                                        " has the wrong shape");
                images.push_back(std::move(img));
            }
            res.affected_orig = masks_from_images(images, MaskRole::AffectedOrig);

            const auto& cell_lists = j.at("counterfactual_cells");
            if (static_cast<int>(cell_lists.size()) != frames)
                throw ProtocolError("counterfactual_cells has " +
                                    std::to_string(cell_lists.size()) + " frames, expected " +
                                    std::to_string(frames));
            res.counterfactual_cells.resize(frames);
            for (int t = 0; t < frames; ++t) {
                for (const auto& jc : cell_lists.at(t)) {
                    const GridCell cell{jc.at(0).get<int>(), jc.at(1).get<int>()};
                    if (cell.row < 0 || cell.row >= config_.grid || cell.col < 0 ||
                        cell.col >= config_.grid)
                        throw ProtocolError("cell out of range at frame " + std::to_string(t) +
                                            ": (" + std::to_string(cell.row) + ", " +
                                            std::to_string(cell.col) + ") with grid " +
                                            std::to_string(config_.grid));
                    res.counterfactual_cells[t].push_back(cell);
                }
            }
            res.needs_second_pass = j.at("needs_second_pass").get<bool>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("reasoner response is malformed: ") + e.what());
        }
        return res;
    }

    RemoteReasonerConfig config_;
    std::optional<Response> cache_;
    std::string cache_key_;
};

}  // namespace

std::unique_ptr<RegionReasoner> remote_reasoner(const RemoteReasonerConfig& config) {
    return std::make_unique<RemoteReasoner>(config);
}

}  // namespace voidforge
