#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "oracles/oracles.hpp"
#include "qll/core.hpp"
#include "qll/parallel.hpp"
#include "qll/rng.hpp"

using namespace qll;

TEST_SUITE("rng") {
  TEST_CASE("identical seed and stream reproduce the sequence") {
    RngStream a(42, streams::kDatagen);
    RngStream b(42, streams::kDatagen);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  }

  TEST_CASE("distinct streams and seeds diverge") {
    RngStream a(42, 1);
    RngStream b(42, 2);
    RngStream c(43, 1);
    int same_ab = 0;
    int same_ac = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto x = a.next_u64();
      same_ab += x == b.next_u64();
      same_ac += x == c.next_u64();
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
  }

  TEST_CASE("draws depend only on position") {
    RngStream a(9, 3);
    for (int i = 0; i < 17; ++i) a.next_u64();
    RngStream b(9, 3);
    std::vector<std::uint64_t> seq;
    for (int i = 0; i < 30; ++i) seq.push_back(b.next_u64());
    CHECK(a.position() == 17);
    for (int i = 17; i < 30; ++i) CHECK(a.next_u64() == seq[static_cast<std::size_t>(i)]);
  }

  TEST_CASE("substream does not advance the parent and is stable") {
    RngStream a(5, 1);
    const RngStream before = a;
    RngStream s1 = a.substream(7);
    RngStream s2 = a.substream(7);
    RngStream s3 = a.substream(8);
    CHECK(a == before);
    CHECK(s1.next_u64() == s2.next_u64());
    CHECK(s1.next_u64() != s3.next_u64());
  }

  TEST_CASE("uniform lies in [0,1), uniform_open in (0,1)") {
    RngStream r(1, 1);
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double u = r.uniform();
      const double v = r.uniform_open();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
    CHECK(lo < 1e-3);
    CHECK(hi > 1.0 - 1e-3);
  }

  TEST_CASE("uniform_int is uniform by chi-square") {
    RngStream r(2, 1);
    const std::uint64_t n = 7;
    std::vector<std::uint64_t> counts(n, 0);
    for (int i = 0; i < 70000; ++i) {
      const auto k = r.uniform_int(n);
      REQUIRE(k < n);
      ++counts[k];
    }
    const auto chi = oracle::chi_square(counts, std::vector<double>(n, 1.0 / 7.0));
    CHECK(chi.p_value > 0.001);
    CHECK(r.uniform_int(1) == 0);
    CHECK(r.uniform_int(0) == 0);
  }

  TEST_CASE("normal has zero mean and unit variance") {
    RngStream r(3, 1);
    const int n = 100000;
    double s = 0.0;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = r.normal();
      s += x;
      ss += x * x;
    }
    const double mean = s / n;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(ss / n - mean * mean - 1.0) < 0.02);
  }
}

TEST_SUITE("soft labels") {
  TEST_CASE("constructor normalizes raw weights") {
    const SoftLabel s({1.0, 1.0, 2.0});
    CHECK(s[0] == doctest::Approx(0.25));
    CHECK(s[1] == doctest::Approx(0.25));
    CHECK(s[2] == doctest::Approx(0.5));
    CHECK(s.class_count() == 3);
  }

  TEST_CASE("constructor rejects invalid weights") {
    CHECK_THROWS_AS(SoftLabel({}), std::invalid_argument);
    CHECK_THROWS_AS(SoftLabel({0.5, -0.1, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(SoftLabel({0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(SoftLabel({1.0, std::numeric_limits<double>::quiet_NaN()}), std::invalid_argument);
    CHECK_THROWS_AS(SoftLabel({1.0, std::numeric_limits<double>::infinity()}), std::invalid_argument);
  }

  TEST_CASE("normalized entries sum to one (property)") {
    oracle::Gen g(11);
    for (int t = 0; t < 200; ++t) {
      const std::size_t c = 2 + g.index(9);
      auto raw = g.vec(c, 0.0, 100.0);
      raw[g.index(c)] += 1.0;
      const SoftLabel s(raw);
      double sum = 0.0;
      for (double w : s.weights()) {
        CHECK(w >= 0.0);
        sum += w;
      }
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
  }

  TEST_CASE("one_hot") {
    const SoftLabel s = SoftLabel::one_hot(4, 2);
    CHECK(s.is_one_hot());
    CHECK(s[2] == 1.0);
    CHECK_FALSE(SoftLabel({0.5, 0.5}).is_one_hot());
    CHECK_THROWS(SoftLabel::one_hot(3, 3));
  }
}

TEST_SUITE("entropy") {
  TEST_CASE("reference values") {
    CHECK(entropy(SoftLabel::one_hot(4, 0)) == 0.0);
    CHECK(entropy(SoftLabel({1, 1, 1, 1})) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    // -(0.2 ln 0.2 + 0.3 ln 0.3 + 0.5 ln 0.5)
    CHECK(std::fabs(entropy(SoftLabel({0.2, 0.3, 0.5})) - 1.0296530140645737) < 1e-4);
  }

  TEST_CASE("permutation invariant and bounded by ln c (property)") {
    oracle::Gen g(12);
    for (int t = 0; t < 300; ++t) {
      const std::size_t c = 2 + g.index(8);
      auto w = g.simplex(c);
      if (t % 3 == 0) w[g.index(c)] = 0.0;
      if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[0] = 1.0;
      const double h = entropy(SoftLabel(w));
      auto perm = w;
      std::reverse(perm.begin(), perm.end());
      std::rotate(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(g.index(c)), perm.end());
      CHECK(entropy(SoftLabel(perm)) == doctest::Approx(h).epsilon(1e-12));
      CHECK(h >= 0.0);
      CHECK(h <= std::log(static_cast<double>(c)) + 1e-12);
    }
  }
}

TEST_SUITE("quantize_label") {
  TEST_CASE("one-hot always returns its class") {
    RngStream r(1, streams::kDatagen);
    const SoftLabel s = SoftLabel::one_hot(4, 2);
    for (int i = 0; i < 1000; ++i) CHECK(quantize_label(s, r) == 2);
  }

  TEST_CASE("consumes exactly one draw") {
    RngStream r(1, 1);
    const SoftLabel s({0.2, 0.3, 0.5});
    for (int i = 0; i < 50; ++i) {
      const auto before = r.position();
      quantize_label(s, r);
      CHECK(r.position() == before + 1);
    }
  }

  TEST_CASE("raw weights (1,1,2) sample with probabilities (0.25,0.25,0.5)") {
    RngStream r(4, 1);
    const SoftLabel s({1.0, 1.0, 2.0});
    std::vector<std::uint64_t> counts(3, 0);
    for (int i = 0; i < 100000; ++i) ++counts[quantize_label(s, r)];
    CHECK(oracle::chi_square(counts, {0.25, 0.25, 0.5}).p_value > 0.001);
  }

  TEST_CASE("(0.5,0.5) frequency within 0.5 +- 0.005") {
    RngStream r(5, 1);
    const SoftLabel s({0.5, 0.5});
    std::vector<std::uint64_t> counts(2, 0);
    for (int i = 0; i < 100000; ++i) ++counts[quantize_label(s, r)];
    CHECK(std::fabs(static_cast<double>(counts[0]) / 100000.0 - 0.5) < 0.005);
    CHECK(oracle::chi_square(counts, {0.5, 0.5}).p_value > 0.001);
  }

  TEST_CASE("zero-mass classes are never drawn") {
    RngStream r(6, 1);
    const SoftLabel s({0.0, 0.7, 0.0, 0.3});
    for (int i = 0; i < 20000; ++i) {
      const auto k = quantize_label(s, r);
      CHECK((k == 1 || k == 3));
    }
  }

  TEST_CASE("same stream reproduces labels") {
    const SoftLabel s({0.1, 0.2, 0.3, 0.4});
    RngStream a(8, 2);
    RngStream b(8, 2);
    for (int i = 0; i < 1000; ++i) CHECK(quantize_label(s, a) == quantize_label(s, b));
  }
}

TEST_SUITE("zero_one_test_risk") {
  TEST_CASE("counting") {
    const std::vector<ClassIndex> y{0, 1, 2, 3, 0, 1, 2, 3};
    CHECK(zero_one_test_risk(y, y) == 0.0);
    const std::vector<ClassIndex> wrong{1, 2, 3, 0, 1, 2, 3, 0};
    CHECK(zero_one_test_risk(wrong, y) == 1.0);
    const std::vector<ClassIndex> three{1, 1, 2, 0, 0, 1, 3, 3};  // indices 0, 3, 6 wrong
    CHECK(zero_one_test_risk(three, y) == 0.375);
  }

  TEST_CASE("errors") {
    const std::vector<ClassIndex> empty;
    const std::vector<ClassIndex> one{0};
    const std::vector<ClassIndex> two{0, 1};
    CHECK_THROWS_AS(zero_one_test_risk(empty, empty), std::invalid_argument);
    CHECK_THROWS_AS(zero_one_test_risk(one, two), std::invalid_argument);
  }
}

TEST_SUITE("class priors") {
  TEST_CASE("validation") {
    CHECK_NOTHROW(ClassPriors(0.1, 1.0));
    CHECK_THROWS_AS(ClassPriors(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ClassPriors(0.1, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(ClassPriors(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ClassPriors(std::numeric_limits<double>::quiet_NaN(), 0.5), std::invalid_argument);
  }

  TEST_CASE("defaults are pi1 = 0.1, pi2 = m/c") {
    const ClassPriors p = ClassPriors::defaults(2, 10);
    CHECK(p.pi1() == 0.1);
    CHECK(p.pi2() == doctest::Approx(0.2));
  }
}

TEST_SUITE("dataset invariants") {
  TEST_CASE("validate catches violations") {
    AmbiguousDataset ds;
    ds.class_count = 3;
    ds.feature_dim = 2;
    ds.examples = {{{0.0, 1.0}, 0}, {{1.0, 0.0}, 2}};
    CHECK_NOTHROW(ds.validate());
    ds.examples[1].label = 3;
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.examples[1].label = 1;
    ds.examples[0].features = {0.0};
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.examples[0].features = {0.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.examples[0].features = {0.0, 1.0};
    ds.diagnostics = std::vector<SoftLabel>{SoftLabel::one_hot(3, 0)};
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.diagnostics->push_back(SoftLabel::one_hot(2, 0));
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
  }

  TEST_CASE("mix kind names round-trip") {
    for (MixKind k : {MixKind::kNone, MixKind::kMixup, MixKind::kPatchMix}) {
      CHECK(parse_mix_kind(mix_kind_name(k)) == k);
    }
    CHECK_THROWS_AS(parse_mix_kind("cutout"), std::invalid_argument);
  }
}

TEST_CASE("thread count guard restores the previous setting") {
  const int before = max_threads();
  {
    ThreadCountGuard g(1);
    CHECK(max_threads() == 1);
  }
  CHECK(max_threads() == before);
}
