#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segaug/dataset.hpp"
#include "segaug/tensor.hpp"

namespace segaug {

enum class Region : std::uint8_t { Complete = 0, Core = 1, Enhancing = 2 };
inline constexpr std::array<Region, 3> kRegions = {Region::Complete, Region::Core, Region::Enhancing};

struct RegionSpec {
  std::string_view name;
  std::array<bool, 5> includes;  // indexed by raw code 0..4
};

// complete = {1,2,3,4}, core = {1,3,4}, enhancing = {4}
const RegionSpec& region_spec(Region r);

Tensor region_mask(const Tensor& labels, Region r);

// Overlap metrics on binary masks (uint8, nonzero = foreground).
// Empty-mask conventions: dice(empty, empty) = 1; precision with empty
// prediction = 1 if the truth is empty too, else 0; sensitivity symmetric.
double dice(const Tensor& pred, const Tensor& truth);
double precision(const Tensor& pred, const Tensor& truth);
double sensitivity(const Tensor& pred, const Tensor& truth);

struct RegionMetrics {
  double dice = 0, precision = 0, sensitivity = 0;
};

struct CaseMetrics {
  std::string case_id;
  std::array<RegionMetrics, 3> regions;
};

struct EvalReport {
  std::vector<CaseMetrics> cases;
  std::array<RegionMetrics, 3> mean;

  std::size_t case_count() const { return cases.size(); }
  const RegionMetrics& operator[](Region r) const { return mean[static_cast<std::size_t>(r)]; }
};

CaseMetrics evaluate_case(std::string case_id, const Tensor& pred_labels, const Tensor& truth_labels);
// Aggregates are plain means over cases.
EvalReport make_report(std::vector<CaseMetrics> cases);

// case_id,<region>_dice,<region>_precision,<region>_sensitivity... then a
// final "mean" row.
std::string to_csv(const EvalReport& report);

// Fixed-width table in the column order Dice | Precision | Sensitivity, each
// split into Complete / Core / Enh.
struct TableRow {
  std::string method;
  std::array<RegionMetrics, 3> metrics;
};
std::string format_table(std::span<const TableRow> rows);

}  // namespace segaug
