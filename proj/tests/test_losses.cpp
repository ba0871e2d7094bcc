#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles/oracles.hpp"
#include "qll/losses.hpp"

using namespace qll;

namespace {

const BinaryLossKind kAllBinary[] = {BinaryLossKind::scaled_sjs(), BinaryLossKind::scaled_sjs_fixed(0.3),
                                     BinaryLossKind::kl(), BinaryLossKind::js_fixed(0.5)};

std::vector<MulticlassLossKind> all_multiclass() {
  return {MulticlassLossKind::ce(),        MulticlassLossKind::bootstrap(0.4), MulticlassLossKind::gce(0.7),
          MulticlassLossKind::sce(0.1, 1.0), MulticlassLossKind::js(0.1, true),  MulticlassLossKind::js(0.3, false)};
}

}  // namespace

TEST_SUITE("divergences") {
  TEST_CASE("kl reference values") {
    const std::vector<double> p{0.3, 0.7};
    CHECK(kl_div(p, p) == 0.0);
    CHECK(kl_div(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // 0.3 ln(0.3/0.6) + 0.7 ln(0.7/0.4)
    CHECK(std::fabs(kl_div(p, std::vector<double>{0.6, 0.4}) - 0.18383) < 1e-4);
    CHECK(kl_div(p, std::vector<double>{0.6, 0.4}) == doctest::Approx(0.18378689738681217).epsilon(1e-12));
    CHECK_THROWS_AS(kl_div(p, std::vector<double>{1.0}), std::invalid_argument);
  }

  TEST_CASE("sjs reference values") {
    const std::vector<double> p{1, 0};
    const std::vector<double> q{0.5, 0.5};
    CHECK(std::fabs(sjs_div(p, q, 0.5) - 0.21576) < 1e-4);
    CHECK(sjs_div(p, q, 0.5) == doctest::Approx(0.21576155433883565).epsilon(1e-12));
    CHECK(sjs_div(q, q, 0.2) == 0.0);
    CHECK_THROWS_AS(sjs_div(p, q, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sjs_div(p, q, 0.51), std::invalid_argument);
  }

  TEST_CASE("scale factor at 0.5") {
    CHECK(std::fabs(sjs_scale(0.5) - 2.88539) < 1e-4);
    CHECK(sjs_scale(0.5) == doctest::Approx(2.8853900817779268).epsilon(1e-13));
    CHECK(scaled_sjs(std::vector<double>{0.2, 0.8}, std::vector<double>{0.2, 0.8}, 0.1) == 0.0);
  }

  TEST_CASE("alpha = 0.5 is the symmetric Jensen-Shannon divergence (property)") {
    oracle::Gen g(31);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 2 + g.index(5);
      const auto p = g.simplex(n);
      const auto q = g.simplex(n);
      const double js = sjs_div(p, q, 0.5);
      CHECK(js == doctest::Approx(sjs_div(q, p, 0.5)).epsilon(1e-12));
      CHECK(js == doctest::Approx(oracle::weighted_js(p, q, 0.5)).epsilon(1e-10));
      if (n == 2) CHECK(js <= std::log(2.0) + 1e-15);
      CHECK(js >= 0.0);
    }
  }

  TEST_CASE("scaled SJS approaches KL as alpha shrinks (property)") {
    oracle::Gen g(32);
    for (int t = 0; t < 100; ++t) {
      const auto p = g.bernoulli(0.1, 0.9);
      const auto q = g.bernoulli(0.1, 0.9);
      const double kl = kl_div(p, q);
      if (kl < 1e-6) continue;
      const double e3 = oracle::rel_err(scaled_sjs(p, q, 1e-3), kl);
      const double e4 = oracle::rel_err(scaled_sjs(p, q, 1e-4), kl);
      CHECK(e4 < 0.01);
      CHECK(e4 <= e3);
    }
  }
}

TEST_SUITE("alpha sampling") {
  TEST_CASE("range, mean and determinism") {
    RngStream a(1, streams::kAlpha);
    RngStream b(1, streams::kAlpha);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_alpha(a);
      CHECK(x == sample_alpha(b));
      REQUIRE(x >= kAlphaFloor);
      REQUIRE(x <= 0.5);
      sum += x;
    }
    CHECK(std::fabs(sum / n - 0.25) < 0.01);
  }

  TEST_CASE("halved Beta(0.5,0.5): P(alpha <= a) = (2/pi) asin(sqrt(2a))") {
    RngStream r(2, streams::kAlpha);
    const std::vector<double> edges{0.05, 0.125, 0.25, 0.375, 0.45, 0.5};
    std::vector<std::uint64_t> counts(edges.size(), 0);
    for (int i = 0; i < 100000; ++i) {
      const double x = sample_alpha(r);
      std::size_t k = 0;
      while (x > edges[k]) ++k;
      ++counts[k];
    }
    std::vector<double> probs;
    double prev = 0.0;
    for (double e : edges) {
      const double cdf = 2.0 / M_PI * std::asin(std::sqrt(2.0 * e));
      probs.push_back(cdf - prev);
      prev = cdf;
    }
    CHECK(oracle::chi_square(counts, probs).p_value > 0.001);
  }
}

TEST_SUITE("binary losses") {
  TEST_CASE("reference values") {
    CHECK(binary_loss(BinaryLossKind::kl(), 0.0, Target::kPositive, 0.5) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // 2.88539 x 0.21576
    CHECK(std::fabs(binary_loss(BinaryLossKind::scaled_sjs(), 0.0, Target::kPositive, 0.5) - 0.62258) < 1e-3);
    CHECK(binary_loss(BinaryLossKind::scaled_sjs(), 0.0, Target::kPositive, 0.5) ==
          doctest::Approx(0.6225562489182656).epsilon(1e-12));
    CHECK(binary_loss(BinaryLossKind::js_fixed(0.5), 0.0, Target::kPositive, 0.123) ==
          doctest::Approx(0.6225562489182656).epsilon(1e-12));
    CHECK(binary_loss(BinaryLossKind::kl(), 30.0, Target::kPositive, 0.5) < 1e-6);
  }

  TEST_CASE("KL gradients") {
    CHECK(binary_loss_grad(BinaryLossKind::kl(), 0.0, Target::kNegative, 0.5) == doctest::Approx(0.5));
    oracle::Gen g(33);
    for (int t = 0; t < 50; ++t) {
      const double z = g.uniform(-8, 8);
      CHECK(binary_loss_grad(BinaryLossKind::kl(), z, Target::kPositive, 0.5) ==
            doctest::Approx(oracle::sigmoid(z) - 1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("values agree with the first-principles oracle (property)") {
    oracle::Gen g(34);
    for (const auto& kind : kAllBinary) {
      for (int t = 0; t < 200; ++t) {
        const double z = g.uniform(-12, 12);
        const double a = g.uniform(1e-3, 0.5);
        for (int target : {1, -1}) {
          const double lib = binary_loss(kind, z, static_cast<Target>(target), a);
          CHECK(lib == doctest::Approx(oracle::binary_loss(kind, z, target, a)).epsilon(1e-9));
          CHECK(lib >= 0.0);
        }
      }
    }
  }

  TEST_CASE("gradients match central differences at 20 random points per kind") {
    oracle::Gen g(35);
    for (const auto& kind : kAllBinary) {
      for (int t = 0; t < 20; ++t) {
        const double z = g.uniform(-6, 6);
        const double a = g.uniform(0.05, 0.5);
        for (Target target : {Target::kPositive, Target::kNegative}) {
          const double fd = oracle::central_diff([&](double x) { return binary_loss(kind, x, target, a); }, z);
          const double an = binary_loss_grad(kind, z, target, a);
          CHECK(oracle::rel_err(an, fd, 1e-8) < 1e-4);
          const ValueGrad vg = binary_loss_value_grad(kind, z, target, a);
          CHECK(vg.grad == an);
          CHECK(vg.value == binary_loss(kind, z, target, a));
        }
      }
    }
  }

  TEST_CASE("monotone in the logit on a grid") {
    for (const auto& kind : kAllBinary) {
      double prev_pos = INFINITY;
      double prev_neg = -INFINITY;
      for (double z = -20.0; z <= 20.0; z += 0.25) {
        const double lp = binary_loss(kind, z, Target::kPositive, 0.2);
        const double ln = binary_loss(kind, z, Target::kNegative, 0.2);
        CHECK(lp <= prev_pos + 1e-15);
        CHECK(ln >= prev_neg - 1e-15);
        prev_pos = lp;
        prev_neg = ln;
      }
    }
  }

  TEST_CASE("saturation clamp zeroes the gradient") {
    const BernoulliPair b = BernoulliPair::from_logit(40.0);
    CHECK(b.clamped);
    CHECK(b.pos == doctest::Approx(1.0 - kProbEps));
    CHECK(binary_loss_grad(BinaryLossKind::kl(), 40.0, Target::kPositive, 0.5) == 0.0);
    CHECK(std::isfinite(binary_loss(BinaryLossKind::kl(), 40.0, Target::kNegative, 0.5)));
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(binary_loss(BinaryLossKind::kl(), NAN, Target::kPositive, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(binary_loss(BinaryLossKind::kl(), INFINITY, Target::kPositive, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(BinaryLossKind::scaled_sjs_fixed(0.7).validate(), std::invalid_argument);
    CHECK_THROWS_AS(BinaryLossKind::js_fixed(0.0).validate(), std::invalid_argument);
    CHECK_NOTHROW(BinaryLossKind::js_fixed(0.5).validate());
  }
}

TEST_SUITE("multiclass baselines") {
  TEST_CASE("CE on uniform logits over 10 classes is ln 10") {
    const std::vector<double> z(10, 0.3);
    CHECK(baseline_loss(MulticlassLossKind::ce(), z, 4).value == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }

  TEST_CASE("GCE vanishes when p_y -> 1") {
    const std::vector<double> z{60.0, 0.0, 0.0};
    CHECK(baseline_loss(MulticlassLossKind::gce(0.7), z, 0).value == doctest::Approx(0.0));
  }

  TEST_CASE("closed forms on a fixed point") {
    const std::vector<double> z{1.0, -0.5, 0.25};
    double e[3];
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += e[k] = std::exp(z[static_cast<std::size_t>(k)]);
    const double p0 = e[0] / s, p1 = e[1] / s, p2 = e[2] / s;
    CHECK(baseline_loss(MulticlassLossKind::ce(), z, 0).value == doctest::Approx(-std::log(p0)).epsilon(1e-12));
    CHECK(baseline_loss(MulticlassLossKind::gce(0.7), z, 1).value ==
          doctest::Approx((1 - std::pow(p1, 0.7)) / 0.7).epsilon(1e-12));
    const double bs = -(0.4 + 0.6 * p0) * std::log(p0) - 0.6 * p1 * std::log(p1) - 0.6 * p2 * std::log(p2);
    CHECK(baseline_loss(MulticlassLossKind::bootstrap(0.4), z, 0).value == doctest::Approx(bs).epsilon(1e-12));
    // RCE = -sum_k p_k ln(clamped onehot) = 4 (1 - p_y)
    const double sce = 0.1 * -std::log(p2) + 1.0 * 4.0 * (1.0 - p2);
    CHECK(baseline_loss(MulticlassLossKind::sce(0.1, 1.0), z, 2).value == doctest::Approx(sce).epsilon(1e-12));
    const std::vector<double> onehot{1, 0, 0};
    const std::vector<double> p{p0, p1, p2};
    CHECK(baseline_loss(MulticlassLossKind::js(0.1, true), z, 0).value ==
          doctest::Approx(oracle::js_scale(0.1) * oracle::weighted_js(onehot, p, 0.1)).epsilon(1e-10));
    CHECK(baseline_loss(MulticlassLossKind::js(0.1, false), z, 0).value ==
          doctest::Approx(oracle::weighted_js(onehot, p, 0.1)).epsilon(1e-10));
  }

  TEST_CASE("gradients match central differences (property)") {
    oracle::Gen g(36);
    for (const auto& kind : all_multiclass()) {
      for (int t = 0; t < 20; ++t) {
        const std::size_t c = 2 + g.index(6);
        auto z = g.vec(c, -3, 3);
        const auto y = static_cast<ClassIndex>(g.index(c));
        const LossWithGrad lg = baseline_loss(kind, z, y);
        CHECK(lg.value >= 0.0);
        std::vector<double> fd(c);
        for (std::size_t k = 0; k < c; ++k) {
          fd[k] = oracle::central_diff(
              [&](double x) {
                auto zz = z;
                zz[k] = x;
                return baseline_loss(kind, zz, y).value;
              },
              z[k]);
        }
        CHECK(oracle::rel_err(lg.grad, fd, 1e-8) < 1e-4);
      }
    }
  }

  TEST_CASE("parameter validation and bad input") {
    CHECK_THROWS_AS(MulticlassLossKind::bootstrap(1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(MulticlassLossKind::gce(0.0).validate(), std::invalid_argument);
    CHECK_NOTHROW(MulticlassLossKind::gce(1.0).validate());
    CHECK_THROWS_AS(MulticlassLossKind::sce(0.0, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(MulticlassLossKind::js(1.0).validate(), std::invalid_argument);
    const std::vector<double> z{0.0, NAN};
    CHECK_THROWS_AS(baseline_loss(MulticlassLossKind::ce(), z, 0), std::invalid_argument);
    const std::vector<double> ok{0.0, 1.0};
    CHECK_THROWS_AS(baseline_loss(MulticlassLossKind::ce(), ok, 2), std::invalid_argument);
  }
}
