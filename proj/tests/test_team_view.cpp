#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "heed/team_view.hpp"
#include "heed/util.hpp"
#include "heed/voxel_grid.hpp"
#include "oracles.hpp"

using namespace heed;

namespace {

std::vector<double> random_field(Rng& rng, size_t n, double zero_prob = 0.4) {
  std::vector<double> field(n);
  for (double& v : field) {
    v = rng.next_double() < zero_prob ? 0.0 : rng.uniform(0.0, 4.0);
  }
  return field;
}

}  // namespace

TEST_CASE("aggregate single user degeneracy") {
  Rng rng(42);
  const std::vector<double> field = random_field(rng, 64);
  CHECK(aggregate({field}, AggregationMethod::kSum) == field);
  CHECK(aggregate({field}, AggregationMethod::kMax) == field);
  const auto count = aggregate({field}, AggregationMethod::kCount);
  for (size_t v = 0; v < field.size(); ++v) {
    CHECK(count[v] == (field[v] > 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("aggregate two equal users") {
  const std::vector<double> field{1.0, 0.0, 2.5};
  CHECK(aggregate({field, field}, AggregationMethod::kSum) ==
        std::vector<double>{2.0, 0.0, 5.0});
  CHECK(aggregate({field, field}, AggregationMethod::kMax) == field);
  CHECK(aggregate({field, field}, AggregationMethod::kCount) ==
        std::vector<double>{2.0, 0.0, 2.0});
  CHECK(aggregate({field, field}, AggregationMethod::kDifference) ==
        std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("aggregate matches the per-voxel scalar loop for three users") {
  Rng rng(7);
  const std::vector<std::vector<double>> fields{random_field(rng, 200), random_field(rng, 200),
                                                random_field(rng, 200)};
  const auto sum = aggregate(fields, AggregationMethod::kSum);
  const auto mx = aggregate(fields, AggregationMethod::kMax);
  const auto diff = aggregate(fields, AggregationMethod::kDifference);
  const auto count = aggregate(fields, AggregationMethod::kCount);
  for (size_t v = 0; v < 200; ++v) {
    const double a = fields[0][v], b = fields[1][v], c = fields[2][v];
    CHECK(sum[v] == a + b + c);
    CHECK(mx[v] == std::max({a, b, c}));
    CHECK(diff[v] == std::max({a, b, c}) - std::min({a, b, c}));
    CHECK(count[v] == (a > 0) + (b > 0) + (c > 0));

    // Orderings the aggregation must respect.
    CHECK(sum[v] >= mx[v]);
    CHECK(mx[v] >= a);
    CHECK(count[v] <= 3);
    CHECK((count[v] == 0) == (sum[v] == 0));
  }
}

TEST_CASE("aggregate validates input") {
  CHECK_THROWS_AS(aggregate({}, AggregationMethod::kSum), ValidationError);
  CHECK_THROWS_AS(aggregate({{1.0}, {1.0, 2.0}}, AggregationMethod::kSum), ValidationError);
}

TEST_CASE("classify color classes") {
  RevisConfig cfg;

  SUBCASE("local only is self_only") {
    const auto classes = classify({1.0}, {0.0}, cfg);
    CHECK(classes[0] == VoxelClass::kSelfOnly);
  }
  SUBCASE("neither explored is unexplored") {
    CHECK(classify({0.0}, {0.0}, cfg)[0] == VoxelClass::kUnexplored);
    CHECK(classify({0.04}, {0.049}, cfg)[0] == VoxelClass::kUnexplored);
  }
  SUBCASE("both at or above threshold is both") {
    CHECK(classify({0.05}, {1.0}, cfg)[0] == VoxelClass::kBoth);
  }
  SUBCASE("partner only is partner_only") {
    CHECK(classify({0.0}, {0.2}, cfg)[0] == VoxelClass::kPartnerOnly);
  }
}

TEST_CASE("classify is symmetric under swapping the two users") {
  Rng rng(3);
  RevisConfig cfg;
  const auto local = random_field(rng, 128, 0.5);
  const auto partner = random_field(rng, 128, 0.5);
  const auto forward = classify(local, partner, cfg);
  const auto backward = classify(partner, local, cfg);
  for (size_t v = 0; v < 128; ++v) {
    switch (forward[v]) {
      case VoxelClass::kSelfOnly: CHECK(backward[v] == VoxelClass::kPartnerOnly); break;
      case VoxelClass::kPartnerOnly: CHECK(backward[v] == VoxelClass::kSelfOnly); break;
      default: CHECK(backward[v] == forward[v]); break;
    }
  }
}

TEST_CASE("opacity mapping") {
  RevisConfig cfg;  // threshold 0.05, v_max 10

  CHECK(opacity(0.0, cfg) == 0.0);
  CHECK(opacity(0.0499999, cfg) == 0.0);  // just below the threshold
  CHECK(opacity(cfg.threshold, cfg) == 0.0);
  CHECK(opacity(cfg.v_max, cfg) == 1.0);
  CHECK(opacity(cfg.v_max * 50, cfg) == 1.0);

  Rng rng(17);
  double prev_v = 0, prev_o = 0;
  for (int step = 0; step < 1000; ++step) {
    const double v = prev_v + rng.uniform(0.0, 0.1);
    const double o = opacity(v, cfg);
    CHECK(o >= prev_o);  // monotone
    CHECK(o >= 0.0);
    CHECK(o <= 1.0);
    prev_v = v;
    prev_o = o;
  }
}

TEST_CASE("coverage_fraction") {
  VoxelGrid grid({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2});
  grid.set_active({0, 0, 0});
  grid.set_active({1, 1, 1});
  grid.set_active({0, 1, 0});

  SUBCASE("all-zero field covers nothing") {
    CHECK(coverage_fraction(std::vector<double>(8, 0.0), grid, 0.05) == 0.0);
  }
  SUBCASE("every active voxel above threshold covers everything") {
    CHECK(coverage_fraction(std::vector<double>(8, 1.0), grid, 0.05) == 1.0);
  }
  SUBCASE("counting matches a direct scan") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const auto field = random_field(rng, 8);
      uint64_t expect = 0;
      for (const VoxelIndex& v : grid.active_indices()) {
        if (field[grid.linear(v)] >= 0.05) ++expect;
      }
      CHECK(coverage_fraction(field, grid, 0.05) == doctest::Approx(expect / 3.0));
    }
  }
  SUBCASE("empty active set is rejected") {
    VoxelGrid empty({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2});
    CHECK_THROWS_AS(coverage_fraction(std::vector<double>(8, 0.0), empty, 0.05),
                    ValidationError);
  }
}

TEST_CASE("team coverage dominates individual coverage") {
  Rng rng(23);
  VoxelGrid grid({{0, 0, 0}, {1, 1, 1}}, {4, 4, 4});
  for (uint32_t i = 0; i < 4; ++i) {
    for (uint32_t j = 0; j < 4; ++j) {
      for (uint32_t k = 0; k < 4; ++k) grid.set_active({i, j, k});
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_field(rng, 64, 0.7);
    const auto b = random_field(rng, 64, 0.7);
    const auto team = aggregate({a, b}, AggregationMethod::kSum);
    const double team_cov = coverage_fraction(team, grid, 0.05);
    CHECK(team_cov >= coverage_fraction(a, grid, 0.05));
    CHECK(team_cov >= coverage_fraction(b, grid, 0.05));
  }
}

TEST_CASE("blend weights sum to one where anyone is above threshold") {
  Rng rng(29);
  RevisConfig cfg;
  cfg.continuous_blend = true;
  const std::vector<std::vector<double>> fields{random_field(rng, 64), random_field(rng, 64)};
  const auto weights = blend_weights(fields, cfg);
  for (size_t v = 0; v < 64; ++v) {
    const double total = weights[0][v] + weights[1][v];
    CHECK(total <= 1.0 + 1e-12);
    if (fields[0][v] >= cfg.threshold && fields[1][v] >= cfg.threshold) {
      CHECK(total == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("revis export format") {
  VoxelGrid grid({{0, 0, 0}, {1, 1, 1}}, {2, 1, 1});
  grid.set_active({0, 0, 0});
  grid.set_active({1, 0, 0});
  RevisConfig cfg;
  std::vector<double> local(2, 0.0), partner(2, 0.0);
  local[grid.linear({0, 0, 0})] = 1.0;
  partner[grid.linear({1, 0, 0})] = 0.2;

  std::ostringstream out;
  write_revis(out, grid, local, partner, cfg);
  CHECK(out.str() ==
        "heed-revis v1\n"
        "i j k class opacity local partner\n"
        "0 0 0 self_only 0.095477386934673364 1 0\n"
        "1 0 0 partner_only 0.015075376884422113 0 0.20000000000000001\n");
}
