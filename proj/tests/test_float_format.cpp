#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "mpschwarz/float_format.hpp"

using namespace mpschwarz;

namespace {

bool close3(double a, double b) { return std::fabs(a - b) <= 5e-3 * std::fabs(b); }

// All finite nonnegative values of a small binary format, by enumeration:
// subnormals, then every binade up to the top one.
std::vector<double> enumerate_format(const FloatFormat& f) {
  std::vector<double> vals = {0.0};
  const int t = f.significand_bits;
  if (f.subnormals_enabled)
    for (int k = 1; k < (1 << (t - 1)); ++k)
      vals.push_back(std::ldexp(double(k), f.exponent_min() + 1 - t));
  for (int b = f.exponent_min(); b <= f.exponent_max(); ++b)
    for (int k = (1 << (t - 1)); k < (1 << t); ++k)
      vals.push_back(std::ldexp(double(k), b + 1 - t));
  std::sort(vals.begin(), vals.end());
  return vals;
}

}  // namespace

TEST_CASE("named presets match the published characteristics to 3 digits") {
  struct Row {
    const char* name;
    double u, xmin;
    double xmax_mantissa;  // x_max = mantissa * 10^exponent
    int xmax_exponent;
  };
  const Row rows[] = {
      {"q52", 1.25e-1, 6.10e-5, 5.73, 4},
      {"q43", 6.25e-2, 1.56e-2, 2.40, 2},
      {"bfloat16", 3.91e-3, 1.18e-38, 3.39, 38},
      {"fp16", 4.88e-4, 6.10e-5, 6.55, 4},
      {"fp32", 5.96e-8, 1.18e-38, 3.40, 38},
      {"fp64", 1.11e-16, 2.23e-308, 1.80, 308},
  };
  for (const Row& r : rows) {
    CAPTURE(r.name);
    const FloatFormat f = FloatFormat::from_name(r.name);
    CHECK(close3(f.unit_roundoff, r.u));
    CHECK(close3(f.x_min, r.xmin));
    CHECK(close3(f.x_max / std::pow(10.0, r.xmax_exponent), r.xmax_mantissa));
  }
}

TEST_CASE("decimal formats: unit roundoff and no range restriction") {
  for (int d = 1; d <= 16; ++d) {
    const FloatFormat f = FloatFormat::from_name("dec:" + std::to_string(d));
    CHECK(f.unit_roundoff == Catch::Approx(0.5 * std::pow(10.0, 1 - d)));
    CHECK(f.x_max == std::numeric_limits<double>::max());
  }
  CHECK_THROWS_AS(FloatFormat::from_name("dec:0"), std::invalid_argument);
  CHECK_THROWS_AS(FloatFormat::from_name("dec:17"), std::invalid_argument);
  CHECK_THROWS_AS(FloatFormat::from_name("fp8"), std::invalid_argument);
}

TEST_CASE("representable values are fixed points for every mode") {
  const FloatFormat fp16 = FloatFormat::from_name("fp16");
  for (RoundMode m :
       {RoundMode::Nearest, RoundMode::TowardZero, RoundMode::AwayFromZero}) {
    CHECK(round_scalar(1.0, fp16, m).value == 1.0);
    CHECK(round_scalar(-1.5, fp16, m).value == -1.5);
    CHECK(round_scalar(0.0, fp16, m).value == 0.0);
  }
  // Working precision: everything is representable.
  const FloatFormat fp64 = FloatFormat::from_name("fp64");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1e10, 1e10);
  for (int i = 0; i < 200; ++i) {
    const double x = dist(rng);
    CHECK(round_scalar(x, fp64, RoundMode::Nearest).value == x);
  }
}

TEST_CASE("q43 overflows past its top of range") {
  const FloatFormat q43 = FloatFormat::from_name("q43");
  for (RoundMode m :
       {RoundMode::Nearest, RoundMode::TowardZero, RoundMode::AwayFromZero}) {
    const RoundResult r = round_scalar(241.0, q43, m);
    CHECK(r.overflow);
    CHECK(r.value == 240.0);  // saturation
    const RoundResult rn = round_scalar(-1e6, q43, m);
    CHECK(rn.overflow);
    CHECK(rn.value == -240.0);
  }
  CHECK_FALSE(round_scalar(240.0, q43, RoundMode::AwayFromZero).overflow);
}

TEST_CASE("decimal directed rounding: 1/3 at four digits") {
  const FloatFormat d4 = FloatFormat::decimal(4);
  CHECK(round_scalar(1.0 / 3.0, d4, RoundMode::TowardZero).value == 0.3333);
  CHECK(round_scalar(1.0 / 3.0, d4, RoundMode::AwayFromZero).value == 0.3334);
  CHECK(round_scalar(1.0 / 3.0, d4, RoundMode::Nearest).value == 0.3333);
  CHECK(round_scalar(-1.0 / 3.0, d4, RoundMode::TowardZero).value == -0.3333);
  CHECK(round_scalar(-1.0 / 3.0, d4, RoundMode::AwayFromZero).value == -0.3334);
  // 2/3 rounds up to nearest.
  CHECK(round_scalar(2.0 / 3.0, d4, RoundMode::Nearest).value == 0.6667);
}

TEST_CASE("decimal rounding against a string-truncation oracle") {
  const int d = 5;
  const FloatFormat fmt = FloatFormat::decimal(d);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mant(1.0, 10.0);
  std::uniform_int_distribution<int> expo(-6, 6);
  int tested = 0;
  for (int i = 0; i < 2000; ++i) {
    const double x = mant(rng) * std::pow(10.0, expo(rng));
    // Oracle: truncate the printed 30-digit representation at d digits.
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.29e", x);
    std::string s(buf);
    const auto epos = s.find('e');
    std::string digits = s.substr(0, 1) + s.substr(2, epos - 2);
    const int e10 = std::stoi(s.substr(epos + 1));
    // Skip samples too close to a d-digit boundary for the oracle to be
    // unambiguous about the truncation direction.
    bool near_boundary = true;
    for (std::size_t k = d; k < d + 8; ++k)
      if (digits[k] != '0' && digits[k] != '9') near_boundary = false;
    if (near_boundary) continue;
    ++tested;
    long long lead = std::stoll(digits.substr(0, d));
    const double down = double(lead) * std::pow(10.0, e10 - d + 1);
    const double up = double(lead + 1) * std::pow(10.0, e10 - d + 1);
    const double got_down = round_scalar(x, fmt, RoundMode::TowardZero).value;
    const double got_up = round_scalar(x, fmt, RoundMode::AwayFromZero).value;
    CHECK(got_down == Catch::Approx(down).epsilon(1e-12));
    CHECK(got_up == Catch::Approx(up).epsilon(1e-12));
  }
  CHECK(tested > 1500);
}

TEST_CASE("small binary format against an enumeration oracle") {
  const FloatFormat f = FloatFormat::binary(3, 3);
  const std::vector<double> set = enumerate_format(f);
  REQUIRE(set.back() == 14.0);  // (2 - 2^-2) * 2^3

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-20.0, 20.0);
  for (int i = 0; i < 5000; ++i) {
    const double x = dist(rng);
    const double ax = std::fabs(x);
    const double sgn = x < 0 ? -1.0 : 1.0;
    if (ax > set.back()) {
      for (RoundMode m : {RoundMode::Nearest, RoundMode::TowardZero,
                          RoundMode::AwayFromZero})
        CHECK(round_scalar(x, f, m).overflow);
      continue;
    }
    // Directed neighbors of |x| in the value set.
    const auto hi = std::lower_bound(set.begin(), set.end(), ax);
    const double up = *hi;
    const double down = (*hi == ax) ? ax : *(hi - 1);
    CHECK(round_scalar(x, f, RoundMode::TowardZero).value == sgn * down);
    CHECK(round_scalar(x, f, RoundMode::AwayFromZero).value == sgn * up);
    const double got = round_scalar(x, f, RoundMode::Nearest).value;
    const double best = std::min(ax - down, up - ax);
    CHECK(std::fabs(std::fabs(got) - ax) == Catch::Approx(best).margin(0.0));
  }
}

TEST_CASE("idempotence for every mode and format") {
  std::vector<FloatFormat> fmts;
  for (const auto& n : FloatFormat::table_preset_names())
    fmts.push_back(FloatFormat::from_name(n));
  for (int d : {1, 3, 5, 9, 16}) fmts.push_back(FloatFormat::decimal(d));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-12, 12);
  for (const auto& f : fmts) {
    for (RoundMode m :
         {RoundMode::Nearest, RoundMode::TowardZero, RoundMode::AwayFromZero}) {
      for (int i = 0; i < 300; ++i) {
        const double x = mant(rng) * std::pow(2.0, expo(rng));
        const double once = round_scalar(x, f, m).value;
        CHECK(round_scalar(once, f, m).value == once);
      }
    }
  }
}

TEST_CASE("directedness and the relative error law") {
  std::vector<FloatFormat> fmts = {FloatFormat::from_name("fp16"),
                                   FloatFormat::from_name("bfloat16"),
                                   FloatFormat::decimal(4),
                                   FloatFormat::decimal(7)};
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-8, 8);
  for (const auto& f : fmts) {
    for (int i = 0; i < 2000; ++i) {
      const double x = mant(rng) * std::pow(2.0, expo(rng));
      if (x == 0.0) continue;
      const RoundResult down = round_scalar(x, f, RoundMode::TowardZero);
      const RoundResult up = round_scalar(x, f, RoundMode::AwayFromZero);
      const RoundResult near = round_scalar(x, f, RoundMode::Nearest);
      if (down.overflow || up.overflow || down.underflow || up.underflow)
        continue;
      CHECK(std::fabs(down.value) <= std::fabs(x));
      CHECK(std::fabs(up.value) >= std::fabs(x));
      if (down.value != 0.0) CHECK(std::signbit(down.value) == std::signbit(x));
      CHECK(std::signbit(up.value) == std::signbit(x));
      // The relative law holds in the normal range only.
      if (f.kind == FormatKind::Binary && std::fabs(x) < f.x_min) continue;
      const double bound = 2.0 * f.unit_roundoff * std::fabs(x) * (1 + 1e-12);
      CHECK(std::fabs(down.value - x) <= bound);
      CHECK(std::fabs(up.value - x) <= bound);
      CHECK(std::fabs(near.value - x) <= bound);
    }
  }
}

TEST_CASE("finer formats do not round farther (sanity bound)") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  std::vector<FloatFormat> chain;
  for (int t : {4, 6, 8, 10}) chain.push_back(FloatFormat::binary(t, 8));
  for (int i = 0; i < 2000; ++i) {
    const double x = dist(rng);
    for (std::size_t a = 0; a + 1 < chain.size(); ++a) {
      const double fine = round_scalar(x, chain[a + 1], RoundMode::Nearest).value;
      const double coarse = round_scalar(x, chain[a], RoundMode::Nearest).value;
      CHECK(std::fabs(fine - x) <=
            std::fabs(coarse - x) +
                2 * chain[a + 1].unit_roundoff * std::fabs(x) + 1e-300);
    }
  }
}

TEST_CASE("underflow handling with and without subnormals") {
  const FloatFormat with_sub = FloatFormat::binary(4, 4, true);
  const FloatFormat no_sub = FloatFormat::binary(4, 4, false);
  const double tiny = with_sub.x_min / 64.0;  // below the subnormal range
  const RoundResult r1 = round_scalar(tiny, with_sub, RoundMode::Nearest);
  CHECK(r1.value == 0.0);
  CHECK(r1.underflow);
  // Largest subnormal spacing: x_min/8 is representable with subnormals.
  const RoundResult r2 = round_scalar(with_sub.x_min / 8.0, with_sub, RoundMode::Nearest);
  CHECK(r2.value == with_sub.x_min / 8.0);
  CHECK_FALSE(r2.underflow);
  // Without subnormals the same value snaps to zero or x_min.
  const RoundResult r3 = round_scalar(no_sub.x_min / 8.0, no_sub, RoundMode::Nearest);
  CHECK(r3.value == 0.0);
  CHECK(r3.underflow);
  const RoundResult r4 =
      round_scalar(no_sub.x_min / 8.0, no_sub, RoundMode::AwayFromZero);
  CHECK(r4.value == no_sub.x_min);
  CHECK_FALSE(r4.underflow);
}

TEST_CASE("non-finite input is rejected") {
  const FloatFormat fp16 = FloatFormat::from_name("fp16");
  CHECK_THROWS_AS(
      round_scalar(std::numeric_limits<double>::infinity(), fp16, RoundMode::Nearest),
      std::invalid_argument);
}
