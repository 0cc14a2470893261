#pragma once

#include <cmath>
#include <limits>

#include "asdflow/errors.hpp"

namespace asdflow {

/// Extended real value: either a finite double or +infinity.
///
/// NaN is rejected at construction; it is always a bug, never a sentinel.
class ExtReal {
 public:
  ExtReal() : value_(0.0), finite_(true) {}

  ExtReal(double v) : value_(v), finite_(true) {  // NOLINT: implicit by design
    if (std::isnan(v)) throw Error("ExtReal: NaN is not a value");
    if (std::isinf(v)) {
      if (v < 0) throw Error("ExtReal: -infinity is not representable");
      finite_ = false;
      value_ = 0.0;
    }
  }

  static ExtReal infinity() {
    ExtReal r;
    r.finite_ = false;
    return r;
  }

  bool finite() const { return finite_; }

  /// Finite value; throws if +infinity.
  double value() const {
    if (!finite_) throw Error("ExtReal: value() on +infinity");
    return value_;
  }

  /// Value with +infinity mapped to the IEEE infinity (for comparisons).
  double as_double() const {
    return finite_ ? value_ : std::numeric_limits<double>::infinity();
  }

  ExtReal& operator+=(const ExtReal& o) {
    if (!finite_ || !o.finite_) {
      finite_ = false;
      value_ = 0.0;
    } else {
      value_ += o.value_;
    }
    return *this;
  }

  friend ExtReal operator+(ExtReal a, const ExtReal& b) { return a += b; }

  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    if (a.finite_ != b.finite_) return false;
    return !a.finite_ || a.value_ == b.value_;
  }

  friend bool operator<(const ExtReal& a, const ExtReal& b) {
    return a.as_double() < b.as_double();
  }
  friend bool operator<=(const ExtReal& a, const ExtReal& b) {
    return a.as_double() <= b.as_double();
  }

 private:
  double value_;
  bool finite_;
};

}  // namespace asdflow
