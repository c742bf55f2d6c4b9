#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace tgnt {

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] auto rows() const -> std::size_t { return rows_; }
  [[nodiscard]] auto cols() const -> std::size_t { return cols_; }
  [[nodiscard]] auto size() const -> std::size_t { return data_.size(); }
  [[nodiscard]] auto empty() const -> bool { return data_.empty(); }

  auto operator()(std::size_t r, std::size_t c) -> double& {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  auto operator()(std::size_t r, std::size_t c) const -> double {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  auto row(std::size_t r) -> std::span<double> {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] auto row(std::size_t r) const -> std::span<const double> {
    return {data_.data() + r * cols_, cols_};
  }

  auto data() -> std::vector<double>& { return data_; }
  [[nodiscard]] auto data() const -> const std::vector<double>& { return data_; }

  void append_row(std::span<const double> values) {
    assert(rows_ == 0 || values.size() == cols_);
    if (rows_ == 0) cols_ = values.size();
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  friend auto operator==(const Matrix&, const Matrix&) -> bool = default;

 private:
  std::size_t rows_{};
  std::size_t cols_{};
  std::vector<double> data_;
};

}  // namespace tgnt
