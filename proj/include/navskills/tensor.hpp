#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace navskills {

// Dense row-major matrix. Vectors are (1, n) or (n, 1); scalars (1, 1).
template <typename T>
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int r, int c, T fill = T(0))
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Tensor: negative shape");
  }

  T& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  const T& at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }
};

template <typename T, typename U>
Tensor<T> tensor_cast(const Tensor<U>& src) {
  Tensor<T> out(src.rows, src.cols);
  for (std::size_t i = 0; i < src.v.size(); ++i) out.v[i] = static_cast<T>(src.v[i]);
  return out;
}

}  // namespace navskills
