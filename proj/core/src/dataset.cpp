#include "segaug/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "segaug/log.hpp"
#include "segaug/rng.hpp"
#include "segaug/tensor_io.hpp"

namespace segaug {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Flair:
      return "flair";
    case Modality::T1:
      return "t1";
    case Modality::T1c:
      return "t1c";
    case Modality::T2:
      return "t2";
  }
  return "?";
}

std::string_view grade_name(Grade g) {
  switch (g) {
    case Grade::HG:
      return "HG";
    case Grade::LG:
      return "LG";
    case Grade::Phantom:
      return "phantom";
  }
  return "?";
}

Grade parse_grade(std::string_view s) {
  if (s == "HG") return Grade::HG;
  if (s == "LG") return Grade::LG;
  if (s == "phantom") return Grade::Phantom;
  throw CaseError("unknown grade '" + std::string(s) + "'");
}

void validate_case(const MultimodalCase& c) {
  if (c.labels.dtype() != DType::UInt8 || c.labels.ndim() != 2) {
    throw CaseError(c.case_id + ": labels must be a 2D uint8 tensor");
  }
  for (auto m : kModalities) {
    const auto& img = c.modality(m);
    if (img.dtype() != DType::Float32 || img.shape() != c.labels.shape()) {
      throw CaseError(c.case_id + ": modality " + std::string(modality_name(m)) + " has shape " +
                      shape_string(img.shape()) + " (" + to_string(img.dtype()) + "), labels are " +
                      shape_string(c.labels.shape()));
    }
  }
  const auto codes = c.labels.bytes();
  const auto bad = std::find_if(codes.begin(), codes.end(), [](auto v) { return v > kMaxRawLabel; });
  if (bad != codes.end()) {
    throw CaseError(c.case_id + ": invalid raw label " + std::to_string(*bad) + " at index " +
                    std::to_string(bad - codes.begin()));
  }
}

Tensor zscore_normalize(const Tensor& image) {
  const auto in = image.floats();
  if (in.empty()) throw std::invalid_argument("zscore_normalize: empty image");
  double mean = 0.0;
  for (float v : in) mean += v;
  mean /= static_cast<double>(in.size());
  double var = 0.0;
  for (float v : in) var += (v - mean) * (v - mean);
  const double std = std::sqrt(var / static_cast<double>(in.size()));

  Tensor out(DType::Float32, image.shape());
  if (std < kNormalizeEpsilon) {
    log::warn("zscore_normalize: constant image (std=" + std::to_string(std) + "); returning zeros");
    return out;
  }
  auto o = out.floats();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = static_cast<float>((in[i] - mean) / std);
  return out;
}

Tensor normalized_image(const MultimodalCase& c) {
  const auto h = c.height(), w = c.width();
  Tensor out(DType::Float32, {kNumModalities, h, w});
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    const auto z = zscore_normalize(c.modalities[m]);
    std::copy(z.floats().begin(), z.floats().end(), out.floats().begin() + m * h * w);
  }
  return out;
}

void validate(const PhantomConfig& cfg) {
  if (cfg.num_cases == 0) throw std::invalid_argument("phantom: num_cases must be positive");
  if (cfg.height < 32 || cfg.width < 32) {
    throw std::invalid_argument("phantom: height and width must be >= 32 (got " +
                                std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + ")");
  }
  if (!(cfg.tumor_probability >= 0.0 && cfg.tumor_probability <= 1.0)) {
    throw std::invalid_argument("phantom: tumor_probability must lie in [0,1]");
  }
  if (!(cfg.noise_std >= 0.0) || !std::isfinite(cfg.noise_std)) {
    throw std::invalid_argument("phantom: noise_std must be finite and non-negative");
  }
}

namespace {

// Mean intensity per tissue and modality (FLAIR, T1, T1c, T2). Every tumor class
// differs from its neighbours in at least one channel: edema is bright in FLAIR
// and T2, enhancing tumor bright in T1c, necrosis dark in T1c and bright in T2,
// non-enhancing tumor sits between edema and healthy tissue in FLAIR/T2.
constexpr std::array<std::array<float, kNumModalities>, 5> kContrast = {{
    {0.55f, 0.70f, 0.65f, 0.50f},  // healthy brain
    {0.60f, 0.30f, 0.15f, 1.30f},  // 1 necrosis
    {1.10f, 0.45f, 0.50f, 1.05f},  // 2 edema
    {0.85f, 0.40f, 0.55f, 0.75f},  // 3 non-enhancing
    {0.80f, 0.50f, 1.30f, 0.80f},  // 4 enhancing
}};

constexpr float kMinBrainIntensity = 0.01f;

struct Ellipse {
  double cy, cx, ry, rx, angle;

  // Squared normalized radius; <= 1 inside.
  double radius2(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return u * u + v * v;
  }
};

MultimodalCase make_phantom(const PhantomConfig& cfg, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, {index}));
  const std::size_t H = cfg.height, W = cfg.width;
  const double scale = static_cast<double>(std::min(H, W)) / 64.0;

  const Ellipse brain{H / 2.0 + uniform(rng, -2, 2) * scale, W / 2.0 + uniform(rng, -2, 2) * scale,
                      uniform(rng, 24, 28.5) * scale, uniform(rng, 22, 27) * scale,
                      uniform(rng, -0.3, 0.3)};
  std::array<float, kNumModalities> gain{};
  for (auto& g : gain) g = static_cast<float>(uniform(rng, 0.9, 1.1));

  MultimodalCase c;
  char id[32];
  std::snprintf(id, sizeof id, "phantom_%05zu", index);
  c.case_id = id;
  c.grade = Grade::Phantom;
  c.labels = Tensor(DType::UInt8, {H, W});
  for (auto& m : c.modalities) m = Tensor(DType::Float32, {H, W});

  const bool tumor = uniform(rng, 0, 1) < cfg.tumor_probability;
  double core_r = 0, necrosis_r = 0, sat_r = 0, ty = 0, tx = 0, sy = 0, sx = 0;
  Ellipse edema{};
  if (tumor) {
    core_r = uniform(rng, 4, 6) * scale;
    sat_r = uniform(rng, 2.5, 3.5) * scale;
    necrosis_r = uniform(rng, 0.45, 0.55) * core_r;
    const double ey = core_r + 2 * sat_r + uniform(rng, 2, 4) * scale;
    const double ex = core_r + 2 * sat_r + uniform(rng, 2, 4) * scale;
    const double lim_y = std::max(0.0, std::min(brain.ry, brain.rx) - std::max(ey, ex) - 2);
    ty = brain.cy + uniform(rng, -0.6, 0.6) * lim_y;
    tx = brain.cx + uniform(rng, -0.6, 0.6) * lim_y;
    edema = Ellipse{ty, tx, ey, ex, uniform(rng, 0, std::numbers::pi)};
    const double phi = uniform(rng, 0, 2 * std::numbers::pi);
    sy = ty + (core_r + 0.6 * sat_r) * std::sin(phi);
    sx = tx + (core_r + 0.6 * sat_r) * std::cos(phi);
  }

  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double py = y + 0.5, px = x + 0.5;
      const double rb = brain.radius2(py, px);
      if (rb > 1.0) continue;  // background stays exactly zero
      std::uint8_t code = 0;
      if (tumor) {
        const double dc2 = (py - ty) * (py - ty) + (px - tx) * (px - tx);
        const double ds2 = (py - sy) * (py - sy) + (px - sx) * (px - sx);
        if (edema.radius2(py, px) <= 1.0) code = 2;
        if (ds2 <= sat_r * sat_r) code = 3;
        if (dc2 <= core_r * core_r) code = 4;
        if (dc2 <= necrosis_r * necrosis_r) code = 1;
      }
      c.labels.code(y, x) = code;
      const float shading = code == 0 ? static_cast<float>(1.0 - 0.25 * rb) : 1.0f;
      for (std::size_t m = 0; m < kNumModalities; ++m) {
        double v = kContrast[code][m] * gain[m] * shading;
        if (cfg.noise_std > 0) v += noise(rng);
        c.modalities[m].at(y, x) = std::max(kMinBrainIntensity, static_cast<float>(v));
      }
    }
  }
  return c;
}

}  // namespace

std::vector<MultimodalCase> generate_phantom_dataset(const PhantomConfig& cfg) {
  validate(cfg);
  std::vector<MultimodalCase> cases;
  cases.reserve(cfg.num_cases);
  for (std::size_t i = 0; i < cfg.num_cases; ++i) cases.push_back(make_phantom(cfg, i));
  return cases;
}

bool has_tumor(const MultimodalCase& c) {
  const auto codes = c.labels.bytes();
  return std::any_of(codes.begin(), codes.end(), [](auto v) { return v != 0; });
}

void save_case(const MultimodalCase& c, const std::filesystem::path& dir) {
  validate_case(c);
  std::filesystem::create_directories(dir);
  for (auto m : kModalities) {
    write_tensor(c.modality(m), dir / (std::string(modality_name(m)) + ".tnsr"));
  }
  write_tensor(c.labels, dir / "labels.tnsr");
  std::ostringstream meta;
  meta << "case_id=" << c.case_id << '\n'
       << "grade=" << grade_name(c.grade) << '\n'
       << "height=" << c.height() << '\n'
       << "width=" << c.width() << '\n';
  const auto text = meta.str();
  write_file_atomic(dir / "meta.txt",
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

MultimodalCase load_case(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.txt";
  std::ifstream meta(meta_path);
  if (!meta) throw CaseError(dir.string() + ": missing meta.txt");
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(meta, line);) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CaseError(meta_path.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"case_id", "grade", "height", "width"}) {
    if (!kv.contains(key)) throw CaseError(meta_path.string() + ": missing key '" + key + "'");
  }

  MultimodalCase c;
  c.case_id = kv["case_id"];
  c.grade = parse_grade(kv["grade"]);
  const Shape expected{static_cast<std::size_t>(std::stoull(kv["height"])),
                       static_cast<std::size_t>(std::stoull(kv["width"]))};

  auto load = [&](const std::string& stem) {
    const auto p = dir / (stem + ".tnsr");
    if (!std::filesystem::exists(p)) throw CaseError(dir.string() + ": missing " + (stem == "labels" ? "labels" : "modality") + " file " + stem + ".tnsr");
    auto t = read_tensor(p);
    if (t.shape() != expected) {
      throw CaseError(p.string() + ": shape " + shape_string(t.shape()) + " does not match meta " +
                      shape_string(expected));
    }
    return t;
  };
  for (auto m : kModalities) c.modality(m) = load(std::string(modality_name(m)));
  c.labels = load("labels");
  validate_case(c);
  return c;
}

std::vector<MultimodalCase> load_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw CaseError(root.string() + ": not a directory");
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta.txt")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<MultimodalCase> cases;
  cases.reserve(dirs.size());
  for (const auto& d : dirs) cases.push_back(load_case(d));
  if (cases.empty()) throw CaseError(root.string() + ": no case directories found");
  return cases;
}

void save_dataset(const std::vector<MultimodalCase>& cases, const std::filesystem::path& root) {
  for (const auto& c : cases) save_case(c, root / c.case_id);
}

}  // namespace segaug
