#pragma once

#include <stdexcept>

namespace radarvi {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometry / measurement model.
struct NonPositiveDepth : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };

// Reconstruction.
struct DegenerateRays : Error { using Error::Error; };
struct UnderdeterminedObject : Error { using Error::Error; };
struct CheiralityViolation : Error { using Error::Error; };

// Rigid motion and pose streams.
struct TooFewStatic : Error { using Error::Error; };
struct DegenerateConfiguration : Error { using Error::Error; };
struct EmptyPointSet : Error { using Error::Error; };
struct NoTemporalOverlap : Error { using Error::Error; };
struct NonMonotonicTimestamps : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };

// Spurious-point filter.
struct NonPositiveDt : Error { using Error::Error; };

// CFAR detectors.
struct WindowTooLarge : Error { using Error::Error; };
struct InvalidRank : Error { using Error::Error; };
struct MissingAngleMap : Error { using Error::Error; };

// Metrics.
struct EmptyTruth : Error { using Error::Error; };
struct EmptyCloud : Error { using Error::Error; };

// Configuration and I/O.
struct InvalidConfig : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct MissingInput : Error { using Error::Error; };

}  // namespace radarvi
