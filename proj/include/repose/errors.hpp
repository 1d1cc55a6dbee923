#pragma once

#include <stdexcept>
#include <string>

namespace repose {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Skeleton / pose shape problems (wrong joint count, bad parent tree).
struct TopologyError : Error {
  using Error::Error;
};

// Camera calibration problems (non-orthonormal R, bad K).
struct CalibrationError : Error {
  using Error::Error;
};

// Degenerate geometry: behind-camera points, rank-deficient DLT,
// points at infinity, zero-length IK segments.
struct GeometryError : Error {
  using Error::Error;
};

// Bad configuration values (thresholds, axes, toggles).
struct ConfigError : Error {
  using Error::Error;
};

// Tracker cannot continue (no boxes, fallback without descriptor).
struct TrackingError : Error {
  using Error::Error;
};

// Malformed files and streams; carries location context in the message.
struct FormatError : Error {
  using Error::Error;
};

// Dataset / sequence problems (too short, misaligned, desynchronized).
struct DataError : Error {
  using Error::Error;
};

// Refiner weight-shape mismatches and training divergence.
struct ModelError : Error {
  using Error::Error;
};

}  // namespace repose
