#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "sns/grid.hpp"

namespace sns {

/// Closed-form function on [0,1] with an optional exact second derivative,
/// used for initial data and for truncation-residual studies.
struct Profile {
  std::string name;
  std::function<Complex(double)> value;
  std::function<Complex(double)> second_derivative;  // may be empty
  bool dirichlet_compatible = true;

  bool has_second_derivative() const {
    return static_cast<bool>(second_derivative);
  }

  GridFunction sample_on(std::shared_ptr<const UniformGrid> grid,
                         bool enforce_dirichlet = true) const;
};

/// Parsed profile selector, e.g. from a config file:
///   kind = zero | sin | sech | affine
///   sin:    amplitude * sin(k pi x)
///   sech:   amplitude * sech(width (x - center)), boundary zeroed
///   affine: offset + slope * x   (not Dirichlet compatible)
struct ProfileSpec {
  std::string kind = "sin";
  double amplitude = 1.0;
  int wavenumber = 1;
  double width = 20.0;
  double center = 0.5;
  double offset = 0.0;
  double slope = 0.0;

  Profile build() const;

  /// "sin:k=2,amp=0.5" style one-line form used by the CLI.
  static ProfileSpec parse(const std::string& text);
  std::string canonical() const;
};

Profile zero_profile();
Profile sine_profile(int wavenumber, double amplitude);
Profile sech_profile(double amplitude, double width, double center);
Profile affine_profile(double offset, double slope);

}  // namespace sns
