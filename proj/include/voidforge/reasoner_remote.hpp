#pragma once

#include <memory>
#include <string>

#include "voidforge/masks.hpp"

namespace voidforge {

inline constexpr const char* kReasonerSchema = "void-forge/reasoner/1";
inline constexpr const char* kReasonerPath = "/void-forge/reasoner/1";

struct RemoteReasonerConfig {
    std::string base_url;       // e.g. "http://127.0.0.1:8731"
    int grid = 8;
    double timeout_seconds = 30.0;
};

// HTTP adapter speaking the reasoner protocol. One POST per clip; the
// response is cached so infer_affected + needs_second_pass cost one exchange.
// Transport failures, malformed payloads, and out-of-range cells surface as
// TransportError / ProtocolError / TimeoutError; nothing is defaulted.
std::unique_ptr<RegionReasoner> remote_reasoner(const RemoteReasonerConfig& config);

}  // namespace voidforge
