#include "segaug/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace segaug {
namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::size_t kMaxDims = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.ndim() == 0 || t.ndim() > kMaxDims) {
    throw std::invalid_argument("encode_tensor: rank " + std::to_string(t.ndim()) +
                                " outside 1.." + std::to_string(kMaxDims));
  }
  std::vector<std::uint8_t> out;
  const std::size_t elem = t.dtype() == DType::Float32 ? 4 : 1;
  out.reserve(7 + 4 * t.ndim() + elem * t.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kTensorFormatVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  out.push_back(static_cast<std::uint8_t>(t.ndim()));
  for (auto d : t.shape()) {
    if (d == 0 || d > std::numeric_limits<std::uint32_t>::max()) {
      throw std::invalid_argument("encode_tensor: dimension " + std::to_string(d) +
                                  " not representable");
    }
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  if (t.dtype() == DType::Float32) {
    for (float v : t.floats()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    const auto b = t.bytes();
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> buf) {
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw TensorFormatError("magic", "tnsr: bad magic");
  }
  if (buf.size() < 7) throw TensorFormatError("header", "tnsr: truncated header");
  if (buf[4] != kTensorFormatVersion) {
    throw TensorFormatError("version", "tnsr: unsupported version " + std::to_string(buf[4]));
  }
  DType dtype;
  switch (buf[5]) {
    case 0:
      dtype = DType::Float32;
      break;
    case 1:
      dtype = DType::UInt8;
      break;
    default:
      throw TensorFormatError("dtype", "tnsr: bad dtype code " + std::to_string(buf[5]));
  }
  const std::size_t ndim = buf[6];
  if (ndim == 0 || ndim > kMaxDims) {
    throw TensorFormatError("ndim", "tnsr: bad ndim " + std::to_string(ndim));
  }
  std::size_t offset = 7;
  if (buf.size() < offset + 4 * ndim) throw TensorFormatError("dims", "tnsr: truncated dims");
  Shape shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i, offset += 4) {
    shape[i] = get_u32(buf.data() + offset);
    if (shape[i] == 0) throw TensorFormatError("dims", "tnsr: zero-length dimension " + std::to_string(i));
  }
  const std::size_t n = element_count(shape);
  const std::size_t elem = dtype == DType::Float32 ? 4 : 1;
  const std::size_t remaining = buf.size() - offset;
  if (remaining < n * elem) {
    throw TensorFormatError("payload", "tnsr: truncated payload (" + std::to_string(remaining) +
                                           " of " + std::to_string(n * elem) + " bytes)");
  }
  if (remaining > n * elem) {
    throw TensorFormatError("payload", "tnsr: " + std::to_string(remaining - n * elem) +
                                           " trailing bytes after payload");
  }
  if (dtype == DType::UInt8) {
    return Tensor::from_bytes(std::move(shape),
                              std::vector<std::uint8_t>(buf.begin() + offset, buf.end()));
  }
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i, offset += 4) {
    values[i] = std::bit_cast<float>(get_u32(buf.data() + offset));
    if (!std::isfinite(values[i])) {
      throw TensorFormatError("payload", "tnsr: non-finite value at element " + std::to_string(i));
    }
  }
  return Tensor::from_floats(std::move(shape), std::move(values));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  write_file_atomic(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file_bytes(path));
  } catch (const TensorFormatError& e) {
    throw TensorFormatError(e.field(), path.string() + ": " + e.what());
  }
}

}  // namespace segaug
