#pragma once

#include <limits>
#include <string>
#include <vector>

namespace penal {

/// A real function of one variable used as a weight profile f or a Kac
/// potential v. Built-ins have closed-form integrals; tabulated functions
/// interpolate linearly between nodes.
class ScalarFn {
 public:
  enum class Kind { kExpDecay, kConstant, kIndicator, kBox, kTabulated };

  /// f(u) = exp(-rate * u).
  static ScalarFn exp_decay(double rate = 1.0);
  /// f(u) = value.
  static ScalarFn constant(double value = 1.0);
  /// f(u) = value * 1{u <= threshold}.
  static ScalarFn indicator(double threshold, double value = 1.0);
  /// v(u) = height * 1{|u - center| <= half_width}.
  static ScalarFn box(double height, double half_width = 1.0, double center = 0.0);
  /// Piecewise-linear through (args[i], values[i]); args strictly increasing.
  /// Outside the table the value is held at the nearest node unless
  /// zero_outside is set.
  static ScalarFn tabulated(std::vector<double> args, std::vector<double> values,
                            bool zero_outside = false);
  /// Reads a two-column CSV "arg,value" (optional header line).
  static ScalarFn from_csv(const std::string& path, bool zero_outside = false);

  double operator()(double u) const;

  /// Integral over [a, b] with a <= b; b may be +infinity.
  double integral(double a, double b) const;

  /// True when the function is nonincreasing on the whole line.
  bool nonincreasing() const;

  /// Points where the function has a jump (used to split quadrature).
  std::vector<double> breakpoints() const;

  Kind kind() const { return kind_; }
  std::string describe() const;

  double p0() const { return p0_; }
  double p1() const { return p1_; }
  double p2() const { return p2_; }
  const std::vector<double>& args() const { return args_; }
  const std::vector<double>& values() const { return values_; }
  bool zero_outside() const { return zero_outside_; }

 private:
  Kind kind_ = Kind::kConstant;
  double p0_ = 1.0;
  double p1_ = 0.0;
  double p2_ = 0.0;
  std::vector<double> args_;
  std::vector<double> values_;
  bool zero_outside_ = false;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace penal
