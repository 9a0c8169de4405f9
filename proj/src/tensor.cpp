#include "hm3/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "hm3/errors.hpp"

namespace hm3 {

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  validate();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
}

Tensor Tensor::from_values(std::vector<float> values) {
  std::vector<std::size_t> shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

void Tensor::validate() const {
  if (shape.empty())
    throw ValidationError("tensor shape must have at least one dimension");
  for (std::size_t d : shape)
    if (d == 0)
      throw ValidationError("tensor shape entries must be positive, got " +
                            shape_to_string(shape));
  if (data.size() != shape_product(shape))
    throw ValidationError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_to_string(shape));
  for (float v : data)
    if (!std::isfinite(v))
      throw ValidationError("tensor contains a non-finite value");
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

static void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (!a.same_shape(b))
    throw ValidationError(std::string(op) + ": shape mismatch " +
                          shape_to_string(a.shape) + " vs " +
                          shape_to_string(b.shape));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<float> out(a.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] + b.data[i];
  Tensor r(a.shape, std::move(out));
  return r;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  std::vector<float> out(a.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] - b.data[i];
  return Tensor(a.shape, std::move(out));
}

Tensor scale(const Tensor& a, float s) {
  if (!std::isfinite(s))
    throw ValidationError("scale: factor must be finite");
  std::vector<float> out(a.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] * s;
  return Tensor(a.shape, std::move(out));
}

static std::size_t keep_count(std::size_t total, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    throw ValidationError("keep_fraction must be in (0,1], got " +
                          std::to_string(keep_fraction));
  auto k = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(total)));
  if (k < 1) k = 1;
  if (k > total) k = total;
  return k;
}

float global_magnitude_threshold(const std::vector<const Tensor*>& tensors,
                                 double keep_fraction) {
  return make_trim_plan(tensors, keep_fraction).threshold;
}

TrimPlan make_trim_plan(const std::vector<const Tensor*>& tensors,
                        double keep_fraction) {
  if (tensors.empty())
    throw ValidationError("global_magnitude_threshold: empty tensor list");
  std::size_t total = 0;
  for (const Tensor* t : tensors) total += t->size();
  const std::size_t k = keep_count(total, keep_fraction);

  std::vector<float> mags;
  mags.reserve(total);
  for (const Tensor* t : tensors)
    for (float v : t->data) mags.push_back(std::fabs(v));

  std::nth_element(mags.begin(), mags.begin() + (k - 1), mags.end(),
                   std::greater<float>());
  const float threshold = mags[k - 1];

  std::size_t above = 0;
  for (float m : mags)
    if (m > threshold) ++above;
  return TrimPlan{threshold, k - above};
}

Tensor trim(const Tensor& t, float threshold, std::size_t& tie_budget) {
  if (threshold < 0.0f)
    throw ValidationError("trim: threshold must be non-negative");
  std::vector<float> out(t.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float m = std::fabs(t.data[i]);
    if (m > threshold) {
      out[i] = t.data[i];
    } else if (m == threshold && tie_budget > 0) {
      out[i] = t.data[i];
      --tie_budget;
    } else {
      out[i] = 0.0f;
    }
  }
  return Tensor(t.shape, std::move(out));
}

Tensor trim(const Tensor& t, float threshold) {
  std::size_t unlimited = t.size();
  return trim(t, threshold, unlimited);
}

} // namespace hm3
