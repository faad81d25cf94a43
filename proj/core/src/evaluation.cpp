#include "segaug/evaluation.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace segaug {
namespace {

constexpr std::array<RegionSpec, 3> kSpecs = {{
    {"complete", {false, true, true, true, true}},
    {"core", {false, true, false, true, true}},
    {"enhancing", {false, false, false, false, true}},
}};

struct Counts {
  std::size_t pred = 0, truth = 0, both = 0;
};

Counts count(const Tensor& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape()) {
    throw std::invalid_argument("metrics: prediction " + shape_string(pred.shape()) + " vs truth " +
                                shape_string(truth.shape()));
  }
  Counts c;
  const auto p = pred.bytes();
  const auto t = truth.bytes();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] != 0, b = t[i] != 0;
    c.pred += a;
    c.truth += b;
    c.both += a && b;
  }
  return c;
}

}  // namespace

const RegionSpec& region_spec(Region r) { return kSpecs[static_cast<std::size_t>(r)]; }

Tensor region_mask(const Tensor& labels, Region r) {
  const auto& spec = region_spec(r);
  Tensor mask(DType::UInt8, labels.shape());
  auto out = mask.bytes();
  const auto in = labels.bytes();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] > kMaxRawLabel) throw std::invalid_argument("region_mask: label code above 4");
    out[i] = spec.includes[in[i]] ? 1 : 0;
  }
  return mask;
}

double dice(const Tensor& pred, const Tensor& truth) {
  const auto c = count(pred, truth);
  if (c.pred + c.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.pred + c.truth);
}

double precision(const Tensor& pred, const Tensor& truth) {
  const auto c = count(pred, truth);
  if (c.pred == 0) return c.truth == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.both) / static_cast<double>(c.pred);
}

double sensitivity(const Tensor& pred, const Tensor& truth) {
  const auto c = count(pred, truth);
  if (c.truth == 0) return c.pred == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.both) / static_cast<double>(c.truth);
}

CaseMetrics evaluate_case(std::string case_id, const Tensor& pred_labels, const Tensor& truth_labels) {
  CaseMetrics m{std::move(case_id), {}};
  for (auto r : kRegions) {
    const auto p = region_mask(pred_labels, r);
    const auto t = region_mask(truth_labels, r);
    m.regions[static_cast<std::size_t>(r)] = {dice(p, t), precision(p, t), sensitivity(p, t)};
  }
  return m;
}

EvalReport make_report(std::vector<CaseMetrics> cases) {
  EvalReport report{std::move(cases), {}};
  if (report.cases.empty()) return report;
  for (const auto& c : report.cases) {
    for (std::size_t r = 0; r < 3; ++r) {
      report.mean[r].dice += c.regions[r].dice;
      report.mean[r].precision += c.regions[r].precision;
      report.mean[r].sensitivity += c.regions[r].sensitivity;
    }
  }
  const auto n = static_cast<double>(report.cases.size());
  for (auto& m : report.mean) {
    m.dice /= n;
    m.precision /= n;
    m.sensitivity /= n;
  }
  return report;
}

std::string to_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "# empty-mask conventions: dice(empty,empty)=1; precision(empty pred)=1 iff truth empty; "
        "sensitivity(empty truth)=1 iff pred empty\n";
  os << "case_id";
  for (auto r : kRegions) {
    const auto n = region_spec(r).name;
    os << ',' << n << "_dice," << n << "_precision," << n << "_sensitivity";
  }
  os << '\n';
  char buf[32];
  auto row = [&](const std::string& id, const std::array<RegionMetrics, 3>& m) {
    os << id;
    for (const auto& rm : m) {
      for (double v : {rm.dice, rm.precision, rm.sensitivity}) {
        std::snprintf(buf, sizeof buf, ",%.6f", v);
        os << buf;
      }
    }
    os << '\n';
  };
  for (const auto& c : report.cases) row(c.case_id, c.regions);
  row("mean", report.mean);
  return os.str();
}

std::string format_table(std::span<const TableRow> rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  std::ostringstream os;
  char buf[64];
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  os << pad("Method", width) << " | " << pad("Dice", 22) << " | " << pad("Precision", 22) << " | "
     << "Sensitivity\n";
  os << pad("", width);
  for (int g = 0; g < 3; ++g) os << " | Complete Core  Enh. ";
  os << '\n' << std::string(width + 3 * 25, '-') << '\n';
  for (const auto& r : rows) {
    os << pad(r.method, width);
    for (int metric = 0; metric < 3; ++metric) {
      os << " |";
      for (const auto& m : r.metrics) {
        const double v = metric == 0 ? m.dice : metric == 1 ? m.precision : m.sensitivity;
        std::snprintf(buf, sizeof buf, " %6.4f", v);
        os << buf;
      }
      os << ' ';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace segaug
