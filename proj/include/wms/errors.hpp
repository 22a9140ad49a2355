#pragma once

#include <stdexcept>

namespace wms {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numerics
struct DimensionMismatch : Error { using Error::Error; };
struct NotPositiveSemidefinite : Error { using Error::Error; };
struct NotConverged : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct NotStabilizable : Error { using Error::Error; };
struct NotDetectable : Error { using Error::Error; };

// closed-loop assembly
struct UnstableClosedLoop : Error { using Error::Error; };
struct NoWatermarkPath : Error { using Error::Error; };
struct SingularExcitation : Error { using Error::Error; };

// simulation
struct NumericalBlowup : Error { using Error::Error; };

// detection
struct WindowTooShort : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct SingularWindow : Error { using Error::Error; };
struct NotSpecialCase : Error { using Error::Error; };

}  // namespace wms
