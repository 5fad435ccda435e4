#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace omrn {

// Error taxonomy shared by the whole library.  ValidationError covers bad
// inputs (malformed files, inconsistent shapes, out-of-range indices) and maps
// to CLI exit code 1; NumericError covers runtime numerical failures
// (non-finite values, undefined operations) and maps to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major tensor with a dynamic shape.  Deliberately minimal: the
// compute kernels index raw pointers, so this is storage plus bookkeeping.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape) { resize(std::move(shape)); }

  void resize(std::vector<std::size_t> shape) {
    shape_ = std::move(shape);
    std::size_t n = 1;
    for (std::size_t d : shape_) n *= d;
    data_.assign(n, T(0));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

// Binary tensor record: magic "OMRN", u8 rank, u32 dims (little-endian),
// row-major float32 payload (little-endian).  All dataset and checkpoint
// tensors use this container.
void write_tensor_record(std::ostream& out, const Tensor<float>& t);
Tensor<float> read_tensor_record(std::istream& in, const std::string& context);

void write_tensor_file(const std::string& path, const Tensor<float>& t);
Tensor<float> read_tensor_file(const std::string& path);

// Throws NumericError naming `name` if any element is NaN or infinite.
template <typename T>
void check_finite(const Tensor<T>& t, const char* name);

}  // namespace omrn
