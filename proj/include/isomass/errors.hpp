#pragma once

#include <stdexcept>
#include <string>

namespace isomass {

/// Machine-readable failure categories used across the library.
enum class errc {
    point_in_excised_set,
    point_at_conformal_singularity,
    ball_intersects_excised_set,
    sphere_intersects_excised_set,
    invalid_region,
    zero_perimeter,
    ill_conditioned_fit,
    invalid_argument,
    invalid_config,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::point_in_excised_set: return "PointInExcisedSet";
        case errc::point_at_conformal_singularity: return "PointAtConformalSingularity";
        case errc::ball_intersects_excised_set: return "BallIntersectsExcisedSet";
        case errc::sphere_intersects_excised_set: return "SphereIntersectsExcisedSet";
        case errc::invalid_region: return "InvalidRegion";
        case errc::zero_perimeter: return "ZeroPerimeter";
        case errc::ill_conditioned_fit: return "IllConditionedFit";
        case errc::invalid_argument: return "InvalidArgument";
        case errc::invalid_config: return "InvalidConfig";
    }
    return "UnknownError";
}

/// Exception carrying an errc; thrown on contract violations.
class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

}  // namespace isomass
