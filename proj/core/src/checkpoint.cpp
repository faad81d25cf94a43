#include "segaug/checkpoint.hpp"

#include <cstring>
#include <sstream>

#include "segaug/tensor_io.hpp"

namespace segaug {
namespace {

constexpr char kArchiveMagic[4] = {'T', 'N', 'S', 'A'};
constexpr std::uint8_t kArchiveVersion = 1;
constexpr const char* kManifestEntry = "manifest";

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> buf, std::string origin) : buf_(buf), origin_(std::move(origin)) {}

  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = buf_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (buf_.size() - pos_ < n) throw CheckpointError(origin_ + ": truncated archive while reading " + what);
  }
  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::string origin_;
};

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw CheckpointError("checkpoint: missing tensor '" + name + "'");
  return it->second;
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("checkpoint: missing meta key '" + key + "'");
  return it->second;
}

std::string manifest_text(const Checkpoint& ckpt) {
  std::ostringstream os;
  for (const auto& [name, t] : ckpt.tensors) os << "tensor " << name << ' ' << shape_string(t.shape()) << '\n';
  for (const auto& [key, value] : ckpt.meta) os << "meta " << key << ' ' << value << '\n';
  return os.str();
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  for (const auto& [name, _] : ckpt.tensors) {
    if (name.empty() || name == kManifestEntry || name.find_first_of(" \n\t") != std::string::npos) {
      throw CheckpointError("checkpoint: invalid tensor name '" + name + "'");
    }
  }
  for (const auto& [key, value] : ckpt.meta) {
    if (key.empty() || key.find_first_of(" \n\t") != std::string::npos || value.find('\n') != std::string::npos) {
      throw CheckpointError("checkpoint: invalid meta entry '" + key + "'");
    }
  }
  std::vector<std::uint8_t> out(std::begin(kArchiveMagic), std::end(kArchiveMagic));
  out.push_back(kArchiveVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size() + 1));
  auto entry = [&](const std::string& name, std::span<const std::uint8_t> blob) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le<std::uint64_t>(out, blob.size());
    out.insert(out.end(), blob.begin(), blob.end());
  };
  const auto manifest = manifest_text(ckpt);
  entry(kManifestEntry, std::span(reinterpret_cast<const std::uint8_t*>(manifest.data()), manifest.size()));
  for (const auto& [name, t] : ckpt.tensors) entry(name, encode_tensor(t));
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CheckpointError(path.string() + ": no such checkpoint");
  const auto bytes = read_file_bytes(path);
  Reader r(bytes, path.string());
  if (std::memcmp(r.take(4, "magic").data(), kArchiveMagic, 4) != 0) {
    throw CheckpointError(path.string() + ": bad archive magic");
  }
  if (const auto v = r.le<std::uint8_t>("version"); v != kArchiveVersion) {
    throw CheckpointError(path.string() + ": unsupported archive version " + std::to_string(v));
  }
  const auto count = r.le<std::uint32_t>("entry count");

  std::map<std::string, std::span<const std::uint8_t>> blobs;
  std::string manifest;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.le<std::uint32_t>("name length");
    const auto name_bytes = r.take(name_len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const auto blob = r.take(static_cast<std::size_t>(r.le<std::uint64_t>("blob length")), "blob");
    if (i == 0) {
      if (name != kManifestEntry) throw CheckpointError(path.string() + ": first entry is not the manifest");
      manifest.assign(blob.begin(), blob.end());
    } else if (!blobs.emplace(name, blob).second) {
      throw CheckpointError(path.string() + ": duplicate entry '" + name + "'");
    }
  }
  if (!r.done()) throw CheckpointError(path.string() + ": trailing bytes after last entry");
  if (count == 0) throw CheckpointError(path.string() + ": empty archive");

  Checkpoint ckpt;
  std::istringstream lines(manifest);
  std::size_t line_no = 0;
  for (std::string line; std::getline(lines, line);) {
    ++line_no;
    std::istringstream fields(line);
    std::string kind, name, rest;
    fields >> kind >> name;
    std::getline(fields >> std::ws, rest);
    const auto where = path.string() + ": manifest line " + std::to_string(line_no);
    if (kind == "tensor" && !name.empty() && !rest.empty()) {
      auto it = blobs.find(name);
      if (it == blobs.end()) throw CheckpointError(where + ": no entry for tensor '" + name + "'");
      Tensor t;
      try {
        t = decode_tensor(it->second);
      } catch (const TensorFormatError& e) {
        throw CheckpointError(where + ": tensor '" + name + "': " + e.what());
      }
      if (shape_string(t.shape()) != rest) {
        throw CheckpointError(where + ": tensor '" + name + "' has shape " + shape_string(t.shape()) +
                              ", manifest says " + rest);
      }
      ckpt.tensors.emplace(name, std::move(t));
    } else if (kind == "meta" && !name.empty()) {
      ckpt.meta[name] = rest;
    } else {
      throw CheckpointError(where + ": corrupt manifest entry '" + line + "'");
    }
  }
  if (ckpt.tensors.size() != blobs.size()) {
    throw CheckpointError(path.string() + ": manifest lists " + std::to_string(ckpt.tensors.size()) +
                          " tensors, archive holds " + std::to_string(blobs.size()));
  }
  return ckpt;
}

Tensor from_torch(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kCPU).contiguous();
  Shape shape(c.sizes().begin(), c.sizes().end());
  if (shape.empty()) shape = {1};
  if (c.scalar_type() == torch::kFloat32) {
    const float* p = c.data_ptr<float>();
    return Tensor::from_floats(std::move(shape), std::vector<float>(p, p + c.numel()));
  }
  if (c.scalar_type() == torch::kUInt8) {
    const std::uint8_t* p = c.data_ptr<std::uint8_t>();
    return Tensor::from_bytes(std::move(shape), std::vector<std::uint8_t>(p, p + c.numel()));
  }
  throw std::invalid_argument("from_torch: unsupported scalar type " + std::string(c.dtype().name()));
}

torch::Tensor to_torch(const Tensor& t) {
  std::vector<std::int64_t> sizes(t.shape().begin(), t.shape().end());
  if (t.dtype() == DType::Float32) {
    auto f = t.floats();
    return torch::from_blob(const_cast<float*>(f.data()), sizes, torch::kFloat32).clone();
  }
  auto b = t.bytes();
  return torch::from_blob(const_cast<std::uint8_t*>(b.data()), sizes, torch::kUInt8).clone();
}

namespace {

template <typename Fn>
void for_each_state(const torch::nn::Module& module, Fn&& fn) {
  for (const auto& item : module.named_parameters()) fn(item.key(), item.value());
  for (const auto& item : module.named_buffers()) {
    if (item.value().is_floating_point()) fn(item.key(), item.value());
  }
}

}  // namespace

void export_module(const torch::nn::Module& module, const std::string& prefix, Checkpoint& ckpt) {
  for_each_state(module, [&](const std::string& name, const torch::Tensor& t) {
    ckpt.tensors[join(prefix, name)] = from_torch(t);
  });
}

void import_module(torch::nn::Module& module, const std::string& prefix, const Checkpoint& ckpt) {
  torch::NoGradGuard no_grad;
  for_each_state(module, [&](const std::string& name, const torch::Tensor& t) {
    const auto key = join(prefix, name);
    const auto src = to_torch(ckpt.tensor(key));
    if (src.sizes() != t.sizes()) {
      throw CheckpointError("checkpoint: '" + key + "' has shape " + c10::str(src.sizes()) + ", model expects " +
                            c10::str(t.sizes()));
    }
    const_cast<torch::Tensor&>(t).copy_(src);
  });
}

void export_adam(const torch::optim::Adam& opt, const torch::nn::Module& module, const std::string& prefix,
                 Checkpoint& ckpt) {
  const auto& state = opt.state();
  for (const auto& item : module.named_parameters()) {
    auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const auto key = join(prefix, item.key());
    ckpt.tensors[key + ".exp_avg"] = from_torch(s.exp_avg());
    ckpt.tensors[key + ".exp_avg_sq"] = from_torch(s.exp_avg_sq());
    ckpt.meta[key + ".step"] = std::to_string(s.step());
  }
}

void import_adam(torch::optim::Adam& opt, const torch::nn::Module& module, const std::string& prefix,
                 const Checkpoint& ckpt) {
  auto& state = opt.state();
  for (const auto& item : module.named_parameters()) {
    const auto key = join(prefix, item.key());
    if (!ckpt.meta.contains(key + ".step")) continue;
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(std::stoll(ckpt.meta.at(key + ".step")));
    s->exp_avg(to_torch(ckpt.tensor(key + ".exp_avg")));
    s->exp_avg_sq(to_torch(ckpt.tensor(key + ".exp_avg_sq")));
    if (s->exp_avg().sizes() != item.value().sizes()) {
      throw CheckpointError("checkpoint: optimizer state '" + key + "' does not match parameter shape");
    }
    state[item.value().unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace segaug
