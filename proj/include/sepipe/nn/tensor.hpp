#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "sepipe/common.hpp"

namespace sepipe::nn {

// All tensors are rank-4 with layout (batch, channels, time, freq), row-major
// with freq fastest. Kernels reuse the same container as (Cout, Cin, kT, kF)
// resp. (Cin, Cout, kT, kF) for transposed convolutions; per-channel vectors
// are stored as (1, C, 1, 1) and scalars as (1, 1, 1, 1).
struct Shape {
  int b = 1, c = 1, t = 1, f = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(b) * c * t * f;
  }
  bool operator==(const Shape& o) const { return b == o.b && c == o.c && t == o.t && f == o.f; }
  bool operator!=(const Shape& o) const { return !(*this == o); }
  std::string str() const {
    return "(" + std::to_string(b) + "," + std::to_string(c) + "," + std::to_string(t) + "," +
           std::to_string(f) + ")";
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape_(s), data_(s.size(), fill) {
    require(s.b > 0 && s.c > 0 && s.t > 0 && s.f > 0, "tensor dims must be positive: " + s.str());
  }
  static Tensor scalar(double v) {
    Tensor t(Shape{1, 1, 1, 1});
    t.data_[0] = v;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool is_scalar() const { return data_.size() == 1; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int b, int c, int t, int f) const {
    return ((static_cast<std::size_t>(b) * shape_.c + c) * shape_.t + t) * shape_.f + f;
  }
  double& at(int b, int c, int t, int f) { return data_[index(b, c, t, f)]; }
  double at(int b, int c, int t, int f) const { return data_[index(b, c, t, f)]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Tensor reshaped(Shape s) const {
    require(s.size() == size(), "reshape size mismatch: " + shape_.str() + " -> " + s.str());
    Tensor out = *this;
    out.shape_ = s;
    return out;
  }

 private:
  Shape shape_{};
  std::vector<double> data_;
};

// Named trainable tensor. `grad` always has the shape of `value`; the tape
// accumulates into it and the optimizer consumes it.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.zero(); }
};

}  // namespace sepipe::nn
