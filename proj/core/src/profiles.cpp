#include "sns/profiles.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sns {

GridFunction Profile::sample_on(std::shared_ptr<const UniformGrid> grid,
                                bool enforce_dirichlet) const {
  return GridFunction::sample(std::move(grid), value, enforce_dirichlet);
}

Profile zero_profile() {
  Profile p;
  p.name = "zero";
  p.value = [](double) { return Complex{0.0, 0.0}; };
  p.second_derivative = [](double) { return Complex{0.0, 0.0}; };
  return p;
}

Profile sine_profile(int wavenumber, double amplitude) {
  if (wavenumber < 1) {
    throw std::invalid_argument("sine_profile: wavenumber must be >= 1");
  }
  Profile p;
  std::ostringstream name;
  name << "sin(k=" << wavenumber << ",amp=" << amplitude << ")";
  p.name = name.str();
  const double omega = static_cast<double>(wavenumber) * std::numbers::pi;
  p.value = [amplitude, omega](double x) {
    return Complex{amplitude * std::sin(omega * x), 0.0};
  };
  p.second_derivative = [amplitude, omega](double x) {
    return Complex{-amplitude * omega * omega * std::sin(omega * x), 0.0};
  };
  return p;
}

Profile sech_profile(double amplitude, double width, double center) {
  Profile p;
  std::ostringstream name;
  name << "sech(amp=" << amplitude << ",w=" << width << ",c=" << center << ")";
  p.name = name.str();
  p.value = [amplitude, width, center](double x) {
    return Complex{amplitude / std::cosh(width * (x - center)), 0.0};
  };
  p.second_derivative = [amplitude, width, center](double x) {
    const double s = 1.0 / std::cosh(width * (x - center));
    return Complex{amplitude * width * width * s * (1.0 - 2.0 * s * s), 0.0};
  };
  return p;
}

Profile affine_profile(double offset, double slope) {
  Profile p;
  std::ostringstream name;
  name << "affine(a=" << offset << ",b=" << slope << ")";
  p.name = name.str();
  p.value = [offset, slope](double x) { return Complex{offset + slope * x, 0.0}; };
  p.second_derivative = [](double) { return Complex{0.0, 0.0}; };
  p.dirichlet_compatible = false;
  return p;
}

Profile ProfileSpec::build() const {
  if (kind == "zero") return zero_profile();
  if (kind == "sin") return sine_profile(wavenumber, amplitude);
  if (kind == "sech") return sech_profile(amplitude, width, center);
  if (kind == "affine") return affine_profile(offset, slope);
  throw std::invalid_argument("ProfileSpec: unknown kind '" + kind + "'");
}

ProfileSpec ProfileSpec::parse(const std::string& text) {
  ProfileSpec spec;
  const auto colon = text.find(':');
  spec.kind = text.substr(0, colon);
  if (colon == std::string::npos) {
    spec.build();  // validate kind
    return spec;
  }
  std::stringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("ProfileSpec: expected key=value in '" +
                                  item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "amp") {
        spec.amplitude = std::stod(value);
      } else if (key == "k") {
        spec.wavenumber = std::stoi(value);
      } else if (key == "w") {
        spec.width = std::stod(value);
      } else if (key == "c") {
        spec.center = std::stod(value);
      } else if (key == "a") {
        spec.offset = std::stod(value);
      } else if (key == "b") {
        spec.slope = std::stod(value);
      } else {
        throw std::invalid_argument("ProfileSpec: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("ProfileSpec: bad value for '" + key + "'");
    }
  }
  spec.build();  // validate
  return spec;
}

std::string ProfileSpec::canonical() const {
  std::ostringstream out;
  out << kind;
  if (kind == "sin") {
    out << ":k=" << wavenumber << ",amp=" << amplitude;
  } else if (kind == "sech") {
    out << ":amp=" << amplitude << ",w=" << width << ",c=" << center;
  } else if (kind == "affine") {
    out << ":a=" << offset << ",b=" << slope;
  }
  return out.str();
}

}  // namespace sns
