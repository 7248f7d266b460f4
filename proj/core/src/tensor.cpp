#include "neurodiff/tensor.hpp"

#include <cmath>

#include "neurodiff/error.hpp"

namespace neurodiff {

std::string to_string(const Shape& shape) {
  return std::to_string(shape.rows) + "x" + std::to_string(shape.cols);
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " given " + std::to_string(data_.size()) +
                     " values");
  }
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

double Tensor::item() const {
  if (!shape_.is_scalar()) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return data_[0];
}

std::vector<double> Tensor::column_values(std::size_t c) const {
  if (c >= shape_.cols) throw ShapeError("column " + std::to_string(c) + " out of range for " + to_string(shape_));
  std::vector<double> out(shape_.rows);
  for (std::size_t r = 0; r < shape_.rows; ++r) out[r] = (*this)(r, c);
  return out;
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace neurodiff
