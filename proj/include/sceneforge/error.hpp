#pragma once

#include <stdexcept>
#include <string>

namespace sceneforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SCENEFORGE_DEFINE_ERROR(Name)                                         \
    class Name : public Error {                                               \
    public:                                                                   \
        using Error::Error;                                                   \
    }

SCENEFORGE_DEFINE_ERROR(EmptyMask);
SCENEFORGE_DEFINE_ERROR(DimensionMismatch);
SCENEFORGE_DEFINE_ERROR(DecodeError);
SCENEFORGE_DEFINE_ERROR(IoError);
SCENEFORGE_DEFINE_ERROR(AnchorOutsideMask);
SCENEFORGE_DEFINE_ERROR(JitterExhausted);
SCENEFORGE_DEFINE_ERROR(DegeneratePolygon);
SCENEFORGE_DEFINE_ERROR(ZeroDiagonal);
SCENEFORGE_DEFINE_ERROR(NoUnknownPixels);
SCENEFORGE_DEFINE_ERROR(RegionTouchesBorder);
SCENEFORGE_DEFINE_ERROR(OutOfBounds);
SCENEFORGE_DEFINE_ERROR(EmptyPool);
SCENEFORGE_DEFINE_ERROR(PlacementInfeasible);
SCENEFORGE_DEFINE_ERROR(VersionUnsupported);
SCENEFORGE_DEFINE_ERROR(DuplicateCategory);
SCENEFORGE_DEFINE_ERROR(ConfigError);

#undef SCENEFORGE_DEFINE_ERROR

// CG failed to reach the requested tolerance; carries the residual it did reach.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& msg, double residual, int iterations)
        : Error(msg), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg, std::string location = {})
        : Error(location.empty() ? msg : msg + " (at " + location + ")"),
          location_(std::move(location)) {}

    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

} // namespace sceneforge
