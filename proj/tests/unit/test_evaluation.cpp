#include <doctest.h>

#include "segaug/evaluation.hpp"
#include "test_helpers.hpp"

using namespace segaug;
using segaug::testing::random_codes;
using segaug::testing::random_mask;
using segaug::testing::bytes_of;

namespace {

Tensor mask_of(std::initializer_list<std::uint8_t> v) {
  return Tensor::from_bytes({1, v.size()}, std::vector<std::uint8_t>(v));
}

}  // namespace

TEST_CASE("region masks follow the complete/core/enhancing definitions") {
  Tensor edema(DType::UInt8, {4, 4});
  for (auto& v : edema.bytes()) v = 2;
  for (auto v : bytes_of(region_mask(edema, Region::Core))) CHECK(v == 0);
  for (auto v : bytes_of(region_mask(edema, Region::Complete))) CHECK(v == 1);

  const Tensor zeros(DType::UInt8, {4, 4});
  for (auto r : kRegions)
    for (auto v : bytes_of(region_mask(zeros, r))) CHECK(v == 0);

  const auto labels = random_codes(20, 20, 4, 3);
  const auto complete = region_mask(labels, Region::Complete);
  const auto core = region_mask(labels, Region::Core);
  const auto enh = region_mask(labels, Region::Enhancing);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = labels.bytes()[i];
    CHECK(complete.bytes()[i] == (c >= 1 && c <= 4));
    CHECK(core.bytes()[i] == (c == 1 || c == 3 || c == 4));
    CHECK(enh.bytes()[i] == (c == 4));
    // Monotone nesting.
    CHECK(enh.bytes()[i] <= core.bytes()[i]);
    CHECK(core.bytes()[i] <= complete.bytes()[i]);
  }
}

TEST_CASE("dice hand cases") {
  const auto a = mask_of({1, 1, 0, 0});
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, mask_of({0, 0, 1, 1})) == 0.0);
  CHECK(dice(mask_of({1, 1, 0}), mask_of({0, 1, 1})) == doctest::Approx(0.5));
  CHECK(dice(mask_of({0, 0}), mask_of({0, 0})) == 1.0);
}

TEST_CASE("precision and sensitivity hand cases") {
  const auto p = mask_of({1, 1, 1, 1, 0});
  const auto g = mask_of({1, 1, 0, 0, 0});
  CHECK(precision(p, g) == doctest::Approx(0.5));
  CHECK(sensitivity(p, g) == 1.0);
  CHECK(precision(g, g) == 1.0);
  CHECK(sensitivity(g, g) == 1.0);
  const auto empty = mask_of({0, 0, 0, 0, 0});
  CHECK(precision(empty, g) == 0.0);
  CHECK(sensitivity(empty, g) == 0.0);
  CHECK(precision(empty, empty) == 1.0);
  CHECK(sensitivity(empty, empty) == 1.0);
}

TEST_CASE("metrics agree with set-count brute force and symmetries") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double density = 0.05 + 0.9 * static_cast<double>(seed % 10) / 10.0;
    const auto p = random_mask(9, 7, density, seed);
    const auto g = random_mask(9, 7, 1.0 - density, seed + 1000);
    double np = 0, ng = 0, both = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      np += p.bytes()[i];
      ng += g.bytes()[i];
      both += p.bytes()[i] && g.bytes()[i];
    }
    const double d = (np + ng) == 0 ? 1.0 : 2 * both / (np + ng);
    CHECK(dice(p, g) == doctest::Approx(d).epsilon(1e-12));
    CHECK(dice(p, g) == dice(g, p));
    CHECK(dice(p, g) <= 1.0);
    if (np > 0) CHECK(precision(p, g) == doctest::Approx(both / np));
    if (ng > 0) CHECK(sensitivity(p, g) == doctest::Approx(both / ng));
    CHECK(precision(p, g) == sensitivity(g, p));
  }
}

TEST_CASE("report aggregates are means over cases") {
  const auto truth = random_codes(16, 16, 4, 1);
  std::vector<CaseMetrics> cases;
  cases.push_back(evaluate_case("perfect", truth, truth));
  cases.push_back(evaluate_case("other", random_codes(16, 16, 4, 2), truth));
  cases.push_back(evaluate_case("blank", Tensor(DType::UInt8, {16, 16}), truth));
  for (const auto& m : cases[0].regions) {
    CHECK(m.dice == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.sensitivity == 1.0);
  }
  const auto report = make_report(cases);
  CHECK(report.case_count() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    const double hand = (cases[0].regions[r].dice + cases[1].regions[r].dice + cases[2].regions[r].dice) / 3.0;
    CHECK(report.mean[r].dice == doctest::Approx(hand));
  }

  const auto csv = to_csv(report);
  CHECK(csv.find("case_id,complete_dice") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // comment + header + 3 cases + mean

  const std::vector<TableRow> rows = {{"w/o DA", report.mean}, {"w/ DA", report.mean}};
  const auto table = format_table(rows);
  CHECK(table.find("Dice") < table.find("Precision"));
  CHECK(table.find("Precision") < table.find("Sensitivity"));
  CHECK(table.find("w/ DA") != std::string::npos);
}
