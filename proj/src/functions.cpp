#include "penal/functions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "penal/errors.hpp"

namespace penal {

ScalarFn ScalarFn::exp_decay(double rate) {
  if (!std::isfinite(rate)) throw ConfigError("exp_decay rate must be finite");
  ScalarFn f;
  f.kind_ = Kind::kExpDecay;
  f.p0_ = rate;
  return f;
}

ScalarFn ScalarFn::constant(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("constant must be finite and >= 0");
  ScalarFn f;
  f.kind_ = Kind::kConstant;
  f.p0_ = value;
  return f;
}

ScalarFn ScalarFn::indicator(double threshold, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError("indicator value must be positive");
  if (std::isnan(threshold)) throw ConfigError("indicator threshold is NaN");
  ScalarFn f;
  f.kind_ = Kind::kIndicator;
  f.p0_ = value;
  f.p1_ = threshold;
  return f;
}

ScalarFn ScalarFn::box(double height, double half_width, double center) {
  if (!(height >= 0.0) || !std::isfinite(height)) throw ConfigError("box height must be >= 0");
  if (!(half_width > 0.0) || !std::isfinite(half_width)) throw ConfigError("box half-width must be positive");
  if (!std::isfinite(center)) throw ConfigError("box center must be finite");
  ScalarFn f;
  f.kind_ = Kind::kBox;
  f.p0_ = height;
  f.p1_ = half_width;
  f.p2_ = center;
  return f;
}

ScalarFn ScalarFn::tabulated(std::vector<double> args, std::vector<double> values,
                             bool zero_outside) {
  if (args.size() != values.size() || args.size() < 2) {
    throw ConfigError("tabulated function needs at least two (arg, value) pairs");
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!std::isfinite(args[i]) || !std::isfinite(values[i])) {
      throw ConfigError("tabulated function has non-finite entries");
    }
    if (values[i] < 0.0) throw ConfigError("tabulated function must be nonnegative");
    if (i > 0 && !(args[i] > args[i - 1])) {
      throw ConfigError("tabulated arguments must be strictly increasing");
    }
  }
  ScalarFn f;
  f.kind_ = Kind::kTabulated;
  f.args_ = std::move(args);
  f.values_ = std::move(values);
  f.zero_outside_ = zero_outside;
  return f;
}

ScalarFn ScalarFn::from_csv(const std::string& path, bool zero_outside) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open function table '" + path + "'");
  std::vector<double> args;
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("function table line lacks a comma: " + line);
    try {
      std::size_t used = 0;
      const double a = std::stod(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      args.push_back(a);
      values.push_back(v);
    } catch (const std::logic_error&) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw ConfigError("bad number in function table: " + line);
    }
    first = false;
  }
  return tabulated(std::move(args), std::move(values), zero_outside);
}

double ScalarFn::operator()(double u) const {
  switch (kind_) {
    case Kind::kExpDecay:
      return std::exp(-p0_ * u);
    case Kind::kConstant:
      return p0_;
    case Kind::kIndicator:
      return u <= p1_ ? p0_ : 0.0;
    case Kind::kBox:
      return std::abs(u - p2_) <= p1_ ? p0_ : 0.0;
    case Kind::kTabulated: {
      if (u <= args_.front()) return (zero_outside_ && u < args_.front()) ? 0.0 : values_.front();
      if (u >= args_.back()) return (zero_outside_ && u > args_.back()) ? 0.0 : values_.back();
      const auto it = std::upper_bound(args_.begin(), args_.end(), u);
      const std::size_t i = static_cast<std::size_t>(it - args_.begin()) - 1;
      const double w = (u - args_[i]) / (args_[i + 1] - args_[i]);
      return values_[i] + w * (values_[i + 1] - values_[i]);
    }
  }
  return 0.0;
}

namespace {

double overlap(double a, double b, double lo, double hi) {
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

}  // namespace

double ScalarFn::integral(double a, double b) const {
  if (std::isnan(a) || std::isnan(b) || b < a) throw UsageError("integral needs a <= b");
  if (a == b) return 0.0;
  switch (kind_) {
    case Kind::kExpDecay: {
      const double r = p0_;
      if (r == 0.0) return b - a;
      if (std::isinf(b)) return r > 0.0 ? std::exp(-r * a) / r : kInf;
      return (std::exp(-r * a) - std::exp(-r * b)) / r;
    }
    case Kind::kConstant:
      return p0_ == 0.0 ? 0.0 : p0_ * (b - a);
    case Kind::kIndicator:
      return p0_ * overlap(a, b, -kInf, p1_);
    case Kind::kBox:
      return p0_ * overlap(a, b, p2_ - p1_, p2_ + p1_);
    case Kind::kTabulated: {
      double total = 0.0;
      const double lo = args_.front();
      const double hi = args_.back();
      if (!zero_outside_) {
        total += values_.front() * overlap(a, b, -kInf, lo);
        if (b > hi) total += values_.back() == 0.0 ? 0.0 : values_.back() * (b - std::max(a, hi));
      }
      for (std::size_t i = 0; i + 1 < args_.size(); ++i) {
        const double l = std::max(a, args_[i]);
        const double r = std::min(b, args_[i + 1]);
        if (r <= l) continue;
        total += 0.5 * (r - l) * ((*this)(l) + (*this)(r));
      }
      return total;
    }
  }
  return 0.0;
}

bool ScalarFn::nonincreasing() const {
  switch (kind_) {
    case Kind::kExpDecay:
      return p0_ >= 0.0;
    case Kind::kConstant:
    case Kind::kIndicator:
      return true;
    case Kind::kBox:
      return p0_ == 0.0;
    case Kind::kTabulated: {
      for (std::size_t i = 1; i < values_.size(); ++i) {
        if (values_[i] > values_[i - 1]) return false;
      }
      return !zero_outside_ || values_.front() == 0.0;
    }
  }
  return false;
}

std::vector<double> ScalarFn::breakpoints() const {
  switch (kind_) {
    case Kind::kIndicator:
      return {p1_};
    case Kind::kBox:
      return {p2_ - p1_, p2_ + p1_};
    case Kind::kTabulated:
      return args_;
    default:
      return {};
  }
}

std::string ScalarFn::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::kExpDecay:
      os << "exp_decay(rate=" << p0_ << ")";
      break;
    case Kind::kConstant:
      os << "constant(" << p0_ << ")";
      break;
    case Kind::kIndicator:
      os << "indicator(threshold=" << p1_ << ", value=" << p0_ << ")";
      break;
    case Kind::kBox:
      os << "box(height=" << p0_ << ", half_width=" << p1_ << ", center=" << p2_ << ")";
      break;
    case Kind::kTabulated:
      os << "tabulated(" << args_.size() << " nodes" << (zero_outside_ ? ", zero outside" : "")
         << ")";
      break;
  }
  return os.str();
}

}  // namespace penal
