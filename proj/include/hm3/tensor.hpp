#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hm3 {

// Dense row-major float32 tensor. Treated as an immutable value: every
// operation returns a fresh tensor. Accumulations run in double and are
// rounded back to float once.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_, std::vector<float> data_);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor from_values(std::vector<float> values); // 1-D convenience

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  // Checks shape/data agreement and that every value is finite.
  void validate() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);

// Magnitude threshold t such that exactly ceil(keep_fraction * total) values
// across all tensors satisfy |v| >= t once ties at t are resolved by the
// shared tie budget (consumed in tensor-list order, then flat-index order).
float global_magnitude_threshold(const std::vector<const Tensor*>& tensors,
                                 double keep_fraction);

struct TrimPlan {
  float threshold = 0.0f;
  std::size_t tie_budget = 0;
};

// Threshold plus the tie budget that makes the kept count exact.
TrimPlan make_trim_plan(const std::vector<const Tensor*>& tensors,
                        double keep_fraction);

// Zeroes values with |v| < threshold; values with |v| == threshold are kept
// only while tie_budget > 0, decrementing it per kept tie.
Tensor trim(const Tensor& t, float threshold, std::size_t& tie_budget);

// Trim with an unlimited tie budget (all values at the threshold survive).
Tensor trim(const Tensor& t, float threshold);

} // namespace hm3
