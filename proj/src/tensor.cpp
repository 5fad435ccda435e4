#include "omrn/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace omrn {

namespace {

constexpr char kMagic[4] = {'O', 'M', 'R', 'N'};

void put_u32_le(std::string& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xFF));
  buf.push_back(static_cast<char>((v >> 8) & 0xFF));
  buf.push_back(static_cast<char>((v >> 16) & 0xFF));
  buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_tensor_record(std::ostream& out, const Tensor<float>& t) {
  if (t.rank() == 0 || t.rank() > 255)
    throw ValidationError("tensor record: rank must be in [1, 255]");
  std::string buf;
  buf.reserve(4 + 1 + 4 * t.rank() + 4 * t.size());
  buf.append(kMagic, 4);
  buf.push_back(static_cast<char>(t.rank()));
  for (std::size_t d : t.shape()) {
    if (d > 0xFFFFFFFFu) throw ValidationError("tensor record: dimension overflows u32");
    put_u32_le(buf, static_cast<std::uint32_t>(d));
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits;
    float v = t[i];
    std::memcpy(&bits, &v, 4);
    put_u32_le(buf, bits);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ValidationError("tensor record: write failed");
}

Tensor<float> read_tensor_record(std::istream& in, const std::string& context) {
  auto fail = [&](const std::string& msg) -> ValidationError {
    return ValidationError(context + ": " + msg);
  };
  unsigned char head[5];
  in.read(reinterpret_cast<char*>(head), 5);
  if (!in) throw fail("truncated tensor header");
  if (std::memcmp(head, kMagic, 4) != 0) throw fail("bad magic (expected OMRN)");
  std::size_t rank = head[4];
  if (rank == 0) throw fail("zero-rank tensor");
  std::vector<std::size_t> shape(rank);
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    unsigned char d[4];
    in.read(reinterpret_cast<char*>(d), 4);
    if (!in) throw fail("truncated dimension list");
    shape[i] = get_u32_le(d);
    n *= shape[i];
  }
  Tensor<float> t(shape);
  std::vector<unsigned char> payload(4 * n);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!in) throw fail("truncated payload");
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = get_u32_le(payload.data() + 4 * i);
    float v;
    std::memcpy(&v, &bits, 4);
    t[i] = v;
  }
  return t;
}

void write_tensor_file(const std::string& path, const Tensor<float>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  write_tensor_record(out, t);
}

Tensor<float> read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open tensor file: " + path);
  return read_tensor_record(in, path);
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* name) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(static_cast<double>(t[i])))
      throw NumericError(std::string("non-finite value in tensor '") + name + "' at flat index " +
                         std::to_string(i));
  }
}

template void check_finite<float>(const Tensor<float>&, const char*);
template void check_finite<double>(const Tensor<double>&, const char*);

}  // namespace omrn
