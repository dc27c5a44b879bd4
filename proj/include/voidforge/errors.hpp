#pragma once

#include <stdexcept>
#include <string>

namespace voidforge {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// scene
struct RangeError : Error { using Error::Error; };
struct PlacementError : Error { using Error::Error; };
struct TooFewBodies : Error { using Error::Error; };

// physics
struct NumericalBlowup : Error { using Error::Error; };

// shared shape/consistency failures
struct ShapeMismatch : Error { using Error::Error; };
struct UnknownId : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };

// noise
struct IndivisibleResolution : Error { using Error::Error; };

// file formats
struct IoError : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct Truncated : Error { using Error::Error; };

// remote reasoner
struct TransportError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct TimeoutError : Error { using Error::Error; };

}  // namespace voidforge
