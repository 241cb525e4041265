#pragma once

#include <string>

namespace opshape {

/// A scalar map of the control, used both for rewards w_i(u) and for
/// control-dependent influence probabilities alpha_i(u).
///
/// Every kind is concave and nondecreasing on u >= 0.
class ResponseCurve {
 public:
  enum class Kind { Saturating, Linear, Constant };

  /// u / (u + scale); scale > 0.
  static ResponseCurve saturating(double scale = 0.1) { return {Kind::Saturating, scale}; }
  /// slope * u.
  static ResponseCurve linear(double slope = 1.0) { return {Kind::Linear, slope}; }
  static ResponseCurve constant(double value) { return {Kind::Constant, value}; }

  double value(double u) const {
    switch (kind_) {
      case Kind::Saturating: return u / (u + param_);
      case Kind::Linear: return param_ * u;
      case Kind::Constant: return param_;
    }
    return 0.0;
  }

  double derivative(double u) const {
    switch (kind_) {
      case Kind::Saturating: {
        const double d = u + param_;
        return param_ / (d * d);
      }
      case Kind::Linear: return param_;
      case Kind::Constant: return 0.0;
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }
  std::string describe() const;

 private:
  ResponseCurve(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_;
};

}  // namespace opshape
