#include "segaug/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace segaug {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view v) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw std::invalid_argument("expected a number");
  return out;
}

template <typename Int>
Int parse_int(std::string_view v) {
  Int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw std::invalid_argument("expected an integer");
  return out;
}

std::string_view order_name(DeformOrder o) { return o == DeformOrder::RawFirst ? "raw_first" : "semantic_first"; }
DeformOrder parse_order(std::string_view v) {
  if (v == "raw_first") return DeformOrder::RawFirst;
  if (v == "semantic_first") return DeformOrder::SemanticFirst;
  throw std::invalid_argument("expected raw_first or semantic_first");
}

std::string_view pairing_name(PerceptualPairing p) { return p == PerceptualPairing::Matched ? "matched" : "printed"; }
PerceptualPairing parse_pairing(std::string_view v) {
  if (v == "matched") return PerceptualPairing::Matched;
  if (v == "printed") return PerceptualPairing::Printed;
  throw std::invalid_argument("expected matched or printed");
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <typename T>
Field double_field(std::string key, T ExperimentConfig::*outer, double T::*member) {
  return {std::move(key), [=](const ExperimentConfig& c) { return fmt_double(c.*outer.*member); },
          [=](ExperimentConfig& c, std::string_view v) { c.*outer.*member = parse_double(v); }};
}

// Ordered table of every key; the order is the dump order.
const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {"seed", [](const C& c) { return std::to_string(c.seed); },
       [](C& c, std::string_view v) { c.seed = parse_int<std::uint64_t>(v); }},
      {"dataset_dir", [](const C& c) { return c.dataset_dir; }, [](C& c, std::string_view v) { c.dataset_dir = v; }},

      {"phantom.num_cases", [](const C& c) { return std::to_string(c.phantom.num_cases); },
       [](C& c, std::string_view v) { c.phantom.num_cases = parse_int<std::size_t>(v); }},
      {"phantom.height", [](const C& c) { return std::to_string(c.phantom.height); },
       [](C& c, std::string_view v) { c.phantom.height = parse_int<std::size_t>(v); }},
      {"phantom.width", [](const C& c) { return std::to_string(c.phantom.width); },
       [](C& c, std::string_view v) { c.phantom.width = parse_int<std::size_t>(v); }},
      double_field("phantom.tumor_probability", &C::phantom, &PhantomConfig::tumor_probability),
      double_field("phantom.noise_std", &C::phantom, &PhantomConfig::noise_std),

      {"deform.alpha", [](const C& c) { return fmt_double(c.gan.deform.alpha); },
       [](C& c, std::string_view v) { c.gan.deform.alpha = c.seg.augmentation.deform.alpha = parse_double(v); }},
      {"deform.sigma", [](const C& c) { return fmt_double(c.gan.deform.sigma); },
       [](C& c, std::string_view v) { c.gan.deform.sigma = c.seg.augmentation.deform.sigma = parse_double(v); }},
      {"deform.order", [](const C& c) { return std::string(order_name(c.gan.deform_order)); },
       [](C& c, std::string_view v) { c.gan.deform_order = c.seg.augmentation.deform_order = parse_order(v); }},

      {"gan.width_divisor", [](const C& c) { return std::to_string(c.gan.network.width_divisor); },
       [](C& c, std::string_view v) { c.gan.network.width_divisor = parse_int<int>(v); }},
      {"gan.learning_rate", [](const C& c) { return fmt_double(c.gan.optimizer.learning_rate); },
       [](C& c, std::string_view v) { c.gan.optimizer.learning_rate = parse_double(v); }},
      {"gan.beta1", [](const C& c) { return fmt_double(c.gan.optimizer.beta1); },
       [](C& c, std::string_view v) { c.gan.optimizer.beta1 = parse_double(v); }},
      {"gan.beta2", [](const C& c) { return fmt_double(c.gan.optimizer.beta2); },
       [](C& c, std::string_view v) { c.gan.optimizer.beta2 = parse_double(v); }},
      {"gan.batch_size", [](const C& c) { return std::to_string(c.gan.optimizer.batch_size); },
       [](C& c, std::string_view v) { c.gan.optimizer.batch_size = parse_int<std::int64_t>(v); }},
      {"gan.iterations", [](const C& c) { return std::to_string(c.gan.optimizer.iterations); },
       [](C& c, std::string_view v) { c.gan.optimizer.iterations = parse_int<std::int64_t>(v); }},
      {"gan.lambda1", [](const C& c) { return fmt_double(c.gan.weights.lambda1); },
       [](C& c, std::string_view v) { c.gan.weights.lambda1 = parse_double(v); }},
      {"gan.lambda2", [](const C& c) { return fmt_double(c.gan.weights.lambda2); },
       [](C& c, std::string_view v) { c.gan.weights.lambda2 = parse_double(v); }},
      {"gan.tumor_sampling_probability", [](const C& c) { return fmt_double(c.gan.tumor_sampling_probability); },
       [](C& c, std::string_view v) { c.gan.tumor_sampling_probability = parse_double(v); }},
      {"gan.perceptual_pairing", [](const C& c) { return std::string(pairing_name(c.gan.pairing)); },
       [](C& c, std::string_view v) { c.gan.pairing = parse_pairing(v); }},
      {"gan.checkpoint_every", [](const C& c) { return std::to_string(c.gan.checkpoint_every); },
       [](C& c, std::string_view v) { c.gan.checkpoint_every = parse_int<std::int64_t>(v); }},

      {"seg.learning_rate", [](const C& c) { return fmt_double(c.seg.optimizer.learning_rate); },
       [](C& c, std::string_view v) { c.seg.optimizer.learning_rate = parse_double(v); }},
      {"seg.beta1", [](const C& c) { return fmt_double(c.seg.optimizer.beta1); },
       [](C& c, std::string_view v) { c.seg.optimizer.beta1 = parse_double(v); }},
      {"seg.beta2", [](const C& c) { return fmt_double(c.seg.optimizer.beta2); },
       [](C& c, std::string_view v) { c.seg.optimizer.beta2 = parse_double(v); }},
      {"seg.batch_size", [](const C& c) { return std::to_string(c.seg.optimizer.batch_size); },
       [](C& c, std::string_view v) { c.seg.optimizer.batch_size = parse_int<std::int64_t>(v); }},
      {"seg.epochs", [](const C& c) { return std::to_string(c.seg.optimizer.iterations); },
       [](C& c, std::string_view v) { c.seg.optimizer.iterations = parse_int<std::int64_t>(v); }},
      {"seg.base_width", [](const C& c) { return std::to_string(c.seg.base_width); },
       [](C& c, std::string_view v) { c.seg.base_width = parse_int<std::int64_t>(v); }},
      {"seg.depth", [](const C& c) { return std::to_string(c.seg.depth); },
       [](C& c, std::string_view v) { c.seg.depth = parse_int<int>(v); }},
      {"seg.mode", [](const C& c) { return std::string(augment_kind_name(c.seg.augmentation.kind)); },
       [](C& c, std::string_view v) { c.seg.augmentation.kind = parse_augment_kind(v); }},
      {"seg.mix_probability", [](const C& c) { return fmt_double(c.seg.augmentation.mix_probability); },
       [](C& c, std::string_view v) { c.seg.augmentation.mix_probability = parse_double(v); }},

      double_field("split.train", &C::split, &SplitSpec::train),
      double_field("split.val", &C::split, &SplitSpec::val),
      double_field("split.test", &C::split, &SplitSpec::test),
      {"split.max_train", [](const C& c) { return std::to_string(c.split.max_train); },
       [](C& c, std::string_view v) { c.split.max_train = parse_int<std::size_t>(v); }},

      {"synth.count", [](const C& c) { return std::to_string(c.synth_count); },
       [](C& c, std::string_view v) { c.synth_count = parse_int<std::size_t>(v); }},
  };
  return table;
}

void validate_all(const ExperimentConfig& c) {
  validate(c.phantom_config());
  validate(c.gan_config());
  validate(c.seg_config());
  if (c.split.train < 0 || c.split.val < 0 || c.split.test < 0 || c.split.train + c.split.val + c.split.test > 1.0 + 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to at most 1");
  }
}

}  // namespace

GanConfig ExperimentConfig::gan_config() const {
  GanConfig g = gan;
  g.optimizer.seed = seed;
  return g;
}

SegmentationConfig ExperimentConfig::seg_config(std::uint64_t seed_offset) const {
  SegmentationConfig s = seg;
  s.optimizer.seed = seed + seed_offset;
  return s;
}

PhantomConfig ExperimentConfig::phantom_config() const {
  PhantomConfig p = phantom;
  p.seed = seed;
  return p;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, const Field*, std::less<>> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;

  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    auto line = std::string_view(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError(where + "unknown config key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    try {
      it->second->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    } catch (const std::exception& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what() + " (got '" + std::string(value) + "')");
    }
  }
  if (!seen.contains("seed")) throw ConfigError("missing mandatory key 'seed'");
  try {
    validate_all(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(c) + "\n";
  return out;
}

std::string dump_defaults() {
  return "# segaug configuration; every key with its default. seed is mandatory.\n" + to_text(ExperimentConfig{});
}

}  // namespace segaug
