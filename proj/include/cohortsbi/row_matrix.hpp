#pragma once

#include <span>
#include <vector>

#include "cohortsbi/errors.hpp"

namespace cohortsbi {

// Dense row-major matrix used for datasets and draw sets.
struct RowMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  RowMatrix() = default;
  RowMatrix(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw ContractError("RowMatrix: negative extent");
  }

  std::span<double> row(int i) {
    return {data.data() + static_cast<std::size_t>(i) * cols,
            static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * cols,
            static_cast<std::size_t>(cols)};
  }

  void push_row(std::span<const double> r) {
    if (rows == 0 && cols == 0) cols = static_cast<int>(r.size());
    if (static_cast<int>(r.size()) != cols)
      throw ContractError("RowMatrix::push_row: width mismatch");
    data.insert(data.end(), r.begin(), r.end());
    ++rows;
  }
};

}  // namespace cohortsbi
