#include "ora/matrix.hpp"

#include <string>

#include "ora/error.hpp"

namespace ora {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(Errc::shape_mismatch, "matrix " + std::to_string(rows_) + "x" +
                                          std::to_string(cols_) + " given " +
                                          std::to_string(data_.size()) + " values");
  }
}

}  // namespace ora
