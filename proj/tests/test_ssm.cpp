#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "wavefuse/parallel.hpp"
#include "wavefuse/ssm.hpp"

using namespace wavefuse;
using oracle::random_map;

namespace {

oracle::Matrix to_matrix(const Sequence& s) {
  oracle::Matrix m(s.length(), std::vector<double>(s.dim()));
  for (std::size_t t = 0; t < s.length(); ++t)
    for (std::size_t c = 0; c < s.dim(); ++c) m[t][c] = s.step(t)[c];
  return m;
}

Sequence random_sequence(std::size_t t, std::size_t d, std::mt19937_64& gen, float amp = 1.0f) {
  std::uniform_real_distribution<float> dist(-amp, amp);
  Sequence s(t, d);
  for (float& v : s.data()) v = dist(gen);
  return s;
}

double oracle_gap(const Sequence& y, const oracle::Matrix& ref) {
  double worst = 0.0;
  for (std::size_t t = 0; t < y.length(); ++t)
    for (std::size_t c = 0; c < y.dim(); ++c) {
      const double r = ref[t][c];
      worst = std::max(worst, std::abs(y.step(t)[c] - r) / std::max(1.0, std::abs(r)));
    }
  return worst;
}

// d_model = d_state = 1 with B_t = C_t = x_t and unit step size.
ScanParams scalar_params(float a_log) {
  ScanParams p = ScanParams::zeros(1, 1);
  p.proj_b = {1.0f};
  p.proj_c = {1.0f};
  p.proj_delta = {0.0f};
  p.delta_bias = {static_cast<float>(std::log(std::exp(1.0) - 1.0))};
  p.a_log = {a_log};
  p.d_skip = {0.0f};
  return p;
}

}  // namespace

TEST_CASE("memoryless scan, hand evaluated") {
  // Huge a_log drives exp(delta * A) to zero, so only the current step
  // contributes: y = C * delta * B * x = delta * x^3.
  const ScanParams p = scalar_params(30.0f);
  const Sequence y = selective_scan(Sequence(3, 1, {1, 2, 3}), p);
  const double delta = std::log1p(std::exp(std::log(std::exp(1.0) - 1.0)));
  for (std::size_t t = 0; t < 3; ++t) {
    const double x = static_cast<double>(t + 1);
    CHECK(y.step(t)[0] == doctest::Approx(delta * x * x * x).epsilon(1e-5));
  }
}

TEST_CASE("scan with memory, hand evaluated") {
  // A = -1, delta = 1: abar = exp(-1).
  const ScanParams p = scalar_params(0.0f);
  const Sequence y = selective_scan(Sequence(3, 1, {1, 2, 3}), p);
  const double abar = std::exp(-1.0);
  double h = 1.0;
  CHECK(y.step(0)[0] == doctest::Approx(1.0 * h).epsilon(1e-5));
  h = abar * h + 4.0;
  CHECK(y.step(1)[0] == doctest::Approx(2.0 * h).epsilon(1e-5));
  h = abar * h + 9.0;
  CHECK(y.step(2)[0] == doctest::Approx(3.0 * h).epsilon(1e-5));
}

TEST_CASE("zero input gives zero output") {
  Rng rng(1);
  const ScanParams p = ScanParams::random(4, 3, rng);
  const Sequence y = selective_scan(Sequence(10, 4), p);
  for (float v : y.data()) CHECK(v == 0.0f);
}

TEST_CASE("random instance matches the step-by-step oracle") {
  std::mt19937_64 gen(16);
  Rng rng(16);
  const ScanParams p = ScanParams::random(4, 2, rng);
  const Sequence x = random_sequence(16, 4, gen);
  CHECK(oracle_gap(selective_scan(x, p), oracle::naive_scan(to_matrix(x), p).y) <= 1e-5);
}

TEST_CASE("property: oracle equivalence on random sizes") {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::size_t> len(1, 64), dm(1, 8), ds(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial) + 1000);
    const ScanParams p = ScanParams::random(dm(gen), ds(gen), rng);
    const Sequence x = random_sequence(len(gen), p.d_model, gen, 2.0f);
    CHECK(oracle_gap(selective_scan(x, p), oracle::naive_scan(to_matrix(x), p).y) <= 1e-5);
  }
}

TEST_CASE("causality") {
  std::mt19937_64 gen(5);
  Rng rng(5);
  const ScanParams p = ScanParams::random(3, 4, rng);
  const Sequence x = random_sequence(20, 3, gen);
  const Sequence full = selective_scan(x, p);
  for (std::size_t cut : {1u, 7u, 19u}) {
    Sequence head(cut, 3, std::vector<float>(x.data().begin(), x.data().begin() + cut * 3));
    const Sequence part = selective_scan(head, p);
    for (std::size_t i = 0; i < cut * 3; ++i) CHECK(part.data()[i] == full.data()[i]);
  }
}

TEST_CASE("long sequences stay bounded") {
  std::mt19937_64 gen(123);
  Rng rng(123);
  const ScanParams p = ScanParams::random(2, 4, rng);
  const Sequence x = random_sequence(10000, 2, gen, 10.0f);
  const Sequence y = selective_scan(x, p);
  const auto tr = oracle::naive_scan(to_matrix(x), p);

  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> bound(4);
    for (std::size_t n = 0; n < 4; ++n) {
      const double a = -std::exp(static_cast<double>(p.a_log[c * 4 + n]));
      double drive = 0.0, decay = 0.0;
      for (std::size_t t = 0; t < x.length(); ++t) {
        drive = std::max(drive, std::abs(tr.delta[t][c] * tr.b[t][n] * x.step(t)[c]));
        decay = std::max(decay, std::exp(tr.delta[t][c] * a));
      }
      bound[n] = drive / (1.0 - decay);
    }
    for (std::size_t t = 0; t < x.length(); ++t) {
      double y_bound = std::abs(p.d_skip[c] * x.step(t)[c]);
      for (std::size_t n = 0; n < 4; ++n) {
        CHECK(std::abs(tr.state[t][c][n]) <= bound[n] * (1 + 1e-9));
        y_bound += std::abs(tr.c[t][n]) * bound[n];
      }
      const float v = y.step(t)[c];
      REQUIRE(std::isfinite(v));
      CHECK(std::abs(v) <= y_bound * (1 + 1e-3) + 1e-3);
    }
  }
}

TEST_CASE("random parameters satisfy the decay and step invariants") {
  Rng rng(8);
  const ScanParams p = ScanParams::random(6, 5, rng);
  for (float a : p.a_log) {
    const double A = -std::exp(static_cast<double>(a));
    CHECK(A <= -1e-3 * (1 - 1e-6));
    CHECK(A >= -1.0 * (1 + 1e-6));
  }
  for (float b : p.delta_bias) {
    const double step = std::log1p(std::exp(static_cast<double>(b)));
    CHECK(step > 0.0);
    CHECK(step >= 1e-3 * (1 - 1e-4));
    CHECK(step <= 1e-1 * (1 + 1e-4));
  }
}

TEST_CASE("scan rejections") {
  Rng rng(2);
  ScanParams p = ScanParams::random(2, 2, rng);
  CHECK_THROWS_AS(selective_scan(Sequence(0, 2), p), Error);
  CHECK_THROWS_AS(selective_scan(Sequence(3, 3), p), Error);
  p.a_log[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(selective_scan(Sequence(3, 2), p), Error);
  ScanParams q = ScanParams::random(2, 2, rng);
  q.proj_c.pop_back();
  CHECK_THROWS_AS(selective_scan(Sequence(3, 2), q), Error);
}

TEST_CASE("traversal orders on a 2x3 grid") {
  using V = std::vector<std::size_t>;
  CHECK(traversal(ScanOrder::row_forward, 2, 3) == V{0, 1, 2, 3, 4, 5});
  CHECK(traversal(ScanOrder::row_reverse, 2, 3) == V{5, 4, 3, 2, 1, 0});
  CHECK(traversal(ScanOrder::col_forward, 2, 3) == V{0, 3, 1, 4, 2, 5});
  CHECK(traversal(ScanOrder::col_reverse, 2, 3) == V{5, 2, 4, 1, 3, 0});
}

TEST_CASE("ss2d") {
  std::mt19937_64 gen(4);

  SUBCASE("zero input") {
    Rng rng(1);
    const FeatureMap y = ss2d(FeatureMap(Shape{3, 4, 5}), Ss2dParams::random(3, 2, rng));
    for (float v : y.data()) CHECK(v == 0.0f);
  }
  SUBCASE("1x1 map is four identical single steps") {
    Rng rng(2);
    Ss2dParams p = Ss2dParams::random(3, 2, rng, true);
    const FeatureMap x = random_map({3, 1, 1}, gen);
    const Sequence one = selective_scan(Sequence(1, 3, x.values()), p.direction(0));
    const FeatureMap y = ss2d(x, p);
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(y.at(c, 0, 0) == doctest::Approx(4.0 * one.step(0)[c]).epsilon(1e-6));
  }
  SUBCASE("2x2 and 3x3 against explicit permutations") {
    for (std::size_t side : {2u, 3u}) {
      Rng rng(side);
      const Ss2dParams p = Ss2dParams::random(2, 3, rng);
      FeatureMap x(Shape{2, side, side});
      // Distinguishable corner values.
      for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = 0.1f * static_cast<float>(i + 1);
      const auto ref = oracle::ss2d(oracle::to_volume(x), p);
      CHECK(oracle::max_abs_diff(ref, ss2d(x, p)) <= 1e-5 * std::max(1.0, oracle::max_abs(ref)));
    }
  }
  SUBCASE("random rectangle against the oracle") {
    Rng rng(7);
    const Ss2dParams p = Ss2dParams::random(4, 4, rng);
    const FeatureMap x = random_map({4, 5, 7}, gen);
    const auto ref = oracle::ss2d(oracle::to_volume(x), p);
    CHECK(oracle::max_abs_diff(ref, ss2d(x, p)) <= 1e-5 * std::max(1.0, oracle::max_abs(ref)));
  }
  SUBCASE("transposing the map swaps row and column scans") {
    Rng rng(3);
    const Ss2dParams p = Ss2dParams::random(3, 2, rng);
    Ss2dParams swapped = p;
    swapped.directions = {p.directions[2], p.directions[3], p.directions[0], p.directions[1]};
    const FeatureMap x = random_map({3, 4, 6}, gen);
    const FeatureMap a = transpose_spatial(ss2d(x, p));
    const FeatureMap b = ss2d(transpose_spatial(x), swapped);
    CHECK(a.shape() == b.shape());
    CHECK(max_abs_diff(a, b) <= 1e-5);
  }
  SUBCASE("mean aggregation is a quarter of the sum") {
    Rng rng(9);
    Ss2dParams p = Ss2dParams::random(2, 2, rng);
    const FeatureMap x = random_map({2, 4, 4}, gen);
    const FeatureMap sum = ss2d(x, p);
    p.aggregation = Aggregation::mean;
    CHECK(max_abs_diff(ss2d(x, p), scale(sum, 0.25f)) <= 1e-6);
  }
  SUBCASE("shared mode equals four copies") {
    Rng rng(10);
    const Ss2dParams shared = Ss2dParams::random(2, 2, rng, true);
    REQUIRE(shared.directions.size() == 1);
    Ss2dParams copies = shared;
    copies.directions.assign(4, shared.directions[0]);
    const FeatureMap x = random_map({2, 3, 4}, gen);
    CHECK(ss2d(x, shared) == ss2d(x, copies));
  }
  SUBCASE("rejections") {
    Rng rng(11);
    Ss2dParams p = Ss2dParams::random(2, 2, rng);
    CHECK_THROWS_AS(ss2d(FeatureMap(Shape{3, 2, 2}), p), Error);
    p.directions.pop_back();
    CHECK_THROWS_AS(ss2d(FeatureMap(Shape{2, 2, 2}), p), Error);
  }
  SUBCASE("threads do not change bits") {
    Rng rng(12);
    const Ss2dParams p = Ss2dParams::random(4, 4, rng);
    const FeatureMap x = random_map({4, 8, 8}, gen);
    set_num_threads(1);
    const FeatureMap a = ss2d(x, p);
    set_num_threads(4);
    const FeatureMap b = ss2d(x, p);
    set_num_threads(1);
    CHECK(a == b);
  }
}

TEST_CASE("vss block") {
  std::mt19937_64 gen(6);

  SUBCASE("identity weights pass the input through") {
    const FeatureMap x = random_map({4, 5, 5}, gen);
    CHECK(vss_block(x, VssWeights::identity(4)) == x);
  }
  SUBCASE("zero output projection is the identity even with random weights") {
    Rng rng(1);
    VssWeights w = VssWeights::random(4, 2, 4, rng);
    w.embed_out = Linear::zeros(w.embed_out.in, w.embed_out.out);
    const FeatureMap x = random_map({4, 5, 5}, gen);
    CHECK(vss_block(x, w) == x);
  }
  SUBCASE("shape is preserved") {
    Rng rng(2);
    const FeatureMap x = random_map({8, 6, 6}, gen);
    CHECK(vss_block(x, VssWeights::random(8, 2, 16, rng)).shape() == x.shape());
  }
  SUBCASE("matches the composed reference") {
    Rng rng(3);
    const VssWeights w = VssWeights::random(4, 2, 3, rng);
    const FeatureMap x = random_map({4, 4, 5}, gen);
    const auto ref = oracle::vss_block(oracle::to_volume(x), w);
    CHECK(oracle::max_abs_diff(ref, vss_block(x, w)) <= 1e-4 * std::max(1.0, oracle::max_abs(ref)));
  }
  SUBCASE("finite differences agree with a central-difference column") {
    Rng rng(4);
    const VssWeights w = VssWeights::random(4, 2, 4, rng);
    const FeatureMap x = random_map({4, 5, 5}, gen);
    const float eps = 1e-3f;
    for (std::size_t idx : {0u, 37u, 99u}) {
      FeatureMap xp = x;
      xp.data()[idx] += eps;
      const FeatureMap dy = add(vss_block(xp, w), scale(vss_block(x, w), -1.0f));

      // Jacobian column via the double-precision reference.
      auto vp = oracle::to_volume(x), vm = oracle::to_volume(x);
      const std::size_t plane = 25, c = idx / plane, y = (idx % plane) / 5, xx = idx % 5;
      const double h = 1e-4;
      vp[c][y][xx] += h;
      vm[c][y][xx] -= h;
      const auto fp = oracle::vss_block(vp, w), fm = oracle::vss_block(vm, w);

      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < 5; ++i)
          for (std::size_t j = 0; j < 5; ++j) {
            const double jcol = (fp[k][i][j] - fm[k][i][j]) / (2 * h) * eps;
            const double d = dy.at(k, i, j) - jcol;
            num += d * d;
            den += jcol * jcol;
          }
      CHECK(std::sqrt(num) <= 5e-2 * std::sqrt(den));
    }
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(vss_block(FeatureMap(Shape{3, 2, 2}), VssWeights::identity(4)), Error);
  }
}
