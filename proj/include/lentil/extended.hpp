#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lentil/error.hpp"

namespace lentil {

// A non-negative length that may be infinite. Infinity is an explicit state,
// never a sentinel number.
class ExtLength
{
  public:
    constexpr ExtLength() = default;
    constexpr explicit ExtLength(double v) : finite_(true), value_(v) {}

    static constexpr ExtLength infinity()
    {
        ExtLength e;
        e.finite_ = false;
        return e;
    }

    constexpr bool is_finite() const { return finite_; }
    constexpr bool is_infinite() const { return !finite_; }

    double value() const
    {
        if (!finite_)
            throw Error(ErrorCode::internal, "value() of an infinite length");
        return value_;
    }
    // Value or +inf as a double, for arithmetic where IEEE infinity is harmless.
    constexpr double as_double() const
    {
        return finite_ ? value_ : std::numeric_limits<double>::infinity();
    }

    friend constexpr ExtLength operator+(ExtLength a, ExtLength b)
    {
        if (!a.finite_ || !b.finite_)
            return infinity();
        return ExtLength(a.value_ + b.value_);
    }
    friend constexpr ExtLength operator+(ExtLength a, double b)
    {
        return a.finite_ ? ExtLength(a.value_ + b) : infinity();
    }
    friend constexpr ExtLength operator*(double s, ExtLength a)
    {
        return a.finite_ ? ExtLength(s * a.value_) : infinity();
    }
    friend constexpr bool operator<(ExtLength a, ExtLength b)
    {
        if (!a.finite_)
            return false;
        if (!b.finite_)
            return true;
        return a.value_ < b.value_;
    }
    friend constexpr bool operator<(ExtLength a, double b) { return a.finite_ && a.value_ < b; }
    friend constexpr bool operator<=(ExtLength a, ExtLength b) { return !(b < a); }
    friend constexpr bool operator==(ExtLength a, ExtLength b)
    {
        if (a.finite_ != b.finite_)
            return false;
        return !a.finite_ || a.value_ == b.value_;
    }

    std::string to_string() const { return finite_ ? std::to_string(value_) : "infinity"; }

  private:
    bool finite_ = false;
    double value_ = 0.0;
};

inline ExtLength min(ExtLength a, ExtLength b) { return b < a ? b : a; }
inline ExtLength max(ExtLength a, ExtLength b) { return a < b ? b : a; }

}  // namespace lentil
