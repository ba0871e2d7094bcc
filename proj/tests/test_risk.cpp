#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "qll/parallel.hpp"
#include "qll/reference.hpp"
#include "qll/risk.hpp"

using namespace qll;

namespace {

struct Batch {
  Matrix logits;
  std::vector<ClassIndex> labels;
  double pi1 = 0.1;
  double pi2 = 0.5;
  double alpha = 0.25;
};

Batch random_batch(oracle::Gen& g, double spread = 4.0) {
  Batch b;
  const std::size_t n = 2 + g.index(7);
  const std::size_t c = 3 + g.index(2);
  b.logits = g.matrix(n, c, -spread, spread);
  b.labels = g.labels_spanning(n, static_cast<std::uint32_t>(c));
  b.pi1 = g.uniform(0.05, 1.0);
  b.pi2 = g.uniform(0.05, 1.0);
  b.alpha = g.uniform(1e-3, 0.5);
  return b;
}

const BinaryLossKind kKinds[] = {BinaryLossKind::scaled_sjs(), BinaryLossKind::kl(), BinaryLossKind::js_fixed(0.5)};

// Smallest |R_u^- - pi2 R_p^-| over classes, i.e. distance to the max{.,0} kink.
double kink_distance(const Batch& b, const BinaryLossKind& kind, bool full) {
  const auto rows = oracle::rows_of(b.logits);
  double best = INFINITY;
  for (std::size_t j = 0; j < b.logits.cols; ++j) {
    double pm = 0, um = 0, np = 0, nu = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (b.labels[i] == j) {
        pm += oracle::binary_loss(kind, rows[i][j], -1, b.alpha);
        np += 1;
      }
      if (b.labels[i] != j || full) {
        um += oracle::binary_loss(kind, rows[i][j], -1, b.alpha);
        nu += 1;
      }
    }
    const double neg = um / nu - b.pi2 * (np > 0 ? pm / np : 0.0);
    best = std::min(best, std::fabs(neg));
  }
  return best;
}

}  // namespace

TEST_SUITE("risk") {
  TEST_CASE("class_partition") {
    const std::vector<ClassIndex> y{0, 1, 0, 2};
    const auto p = class_partition(y, 0);
    CHECK(p.positive == std::vector<std::size_t>{0, 2});
    CHECK(p.unlabeled == std::vector<std::size_t>{1, 3});
    const auto f = class_partition(y, 1, UMode::kFull);
    CHECK(f.positive == std::vector<std::size_t>{1});
    CHECK(f.unlabeled == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(class_partition(y, 5).positive.empty());
  }

  TEST_CASE("u-mode names round trip") {
    for (UMode m : {UMode::kComplement, UMode::kFull}) CHECK(parse_u_mode(u_mode_name(m)) == m);
    CHECK_THROWS_AS(parse_u_mode("half"), std::invalid_argument);
  }

  TEST_CASE("unbiased PU risk can go negative") {
    // pi = 1, identical P and U sets: R_p^+ + R_u^- - R_p^- = R_p^+ > 0.
    const std::vector<double> p{0.5, -1.0};
    const double same = pu_risk_unbiased(p, p, 1.0, BinaryLossKind::kl(), 0.5);
    CHECK(same == doctest::Approx(0.5 * (std::log1p(std::exp(-0.5)) + std::log1p(std::exp(1.0)))));
    // Confident negatives on U and confident positives: the subtracted
    // R_p^- term dominates.
    const std::vector<double> pos{3.0, 3.0};
    const std::vector<double> unl{-8.0, -8.0};
    CHECK(pu_risk_unbiased(pos, unl, 0.9, BinaryLossKind::kl(), 0.5) < 0.0);
    CHECK(pu_risk_from_means(0.5, 1.0, 0.2, 2.0) == doctest::Approx(0.5 + 0.2 - 1.0));
    CHECK_THROWS_AS(pu_risk_unbiased({}, {}, 0.5, BinaryLossKind::kl(), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(pu_risk_unbiased(pos, unl, 0.0, BinaryLossKind::kl(), 0.5), std::invalid_argument);
  }

  TEST_CASE("nnpu_class_risk branches") {
    const ClassPriors pri(0.1, 0.9);
    const std::vector<double> pos{-3.0, -3.0};
    const std::vector<double> unl{-8.0};
    const auto r = nnpu_class_risk(pos, unl, pri, BinaryLossKind::kl(), 0.5);
    CHECK(r.corrected);
    CHECK(r.n_p == 2);
    CHECK(r.n_u == 1);
    CHECK(r.value == doctest::Approx(0.1 * r.r_p_plus).epsilon(1e-12));
    CHECK(r.objective == doctest::Approx(0.9 * r.r_p_minus - r.r_u_minus).epsilon(1e-12));
    CHECK(r.objective > 0.0);

    const auto empty_p = nnpu_class_risk({}, unl, pri, BinaryLossKind::kl(), 0.5);
    CHECK(empty_p.r_p_plus == 0.0);
    CHECK_FALSE(empty_p.corrected);
    CHECK(empty_p.value == empty_p.r_u_minus);
    CHECK_THROWS_AS(nnpu_class_risk(pos, {}, pri, BinaryLossKind::kl(), 0.5), std::invalid_argument);

    const auto c = combine_class_risk(1.0, 0.3, 0.2, ClassPriors(0.1, 0.5));
    CHECK_FALSE(c.corrected);
    CHECK(c.value == doctest::Approx(0.1 + 0.3 - 0.1));
    CHECK(c.objective == c.value);
  }

  TEST_CASE("two-class hand example") {
    // logits rows: (z0, z1); labels 0, 1; KL loss, complement U.
    Matrix z(2, 2);
    z(0, 0) = 1.0, z(0, 1) = -1.0, z(1, 0) = -2.0, z(1, 1) = 0.5;
    const std::vector<ClassIndex> y{0, 1};
    const ClassPriors pri(0.1, 0.5);
    const auto sp = [](double v) { return std::log1p(std::exp(v)); };  // -ln sigmoid(-v)
    // class 0: P = {z00}, U = {z10}; class 1: P = {z11}, U = {z01}
    const double v0 = 0.1 * sp(-1.0) + std::max(sp(-2.0) - 0.5 * sp(1.0), 0.0);
    const double v1 = 0.1 * sp(-0.5) + std::max(sp(-1.0) - 0.5 * sp(0.5), 0.0);
    const auto r = cpu_risk(z, y, pri, BinaryLossKind::kl(), 0.5);
    CHECK(r.value == doctest::Approx((v0 + v1) / 2).epsilon(1e-12));
    CHECK(r.per_class.size() == 2);
  }

  TEST_CASE("cpu_risk matches the loop oracle (property)") {
    oracle::Gen g(41);
    for (int t = 0; t < 300; ++t) {
      const Batch b = random_batch(g);
      const auto& kind = kKinds[t % 3];
      const bool full = t % 2 == 1;
      const UMode mode = full ? UMode::kFull : UMode::kComplement;
      const auto want = oracle::cpu_risk(oracle::rows_of(b.logits), b.labels, b.pi1, b.pi2, kind, b.alpha, full);
      const auto got = cpu_risk(b.logits, b.labels, ClassPriors(b.pi1, b.pi2), kind, b.alpha, mode);
      CHECK(oracle::rel_err(got.value, want.value) < 1e-10);
      CHECK(oracle::rel_err(got.objective_value, want.objective) < 1e-10);
      for (std::size_t j = 0; j < got.per_class.size(); ++j) {
        CHECK(got.per_class[j].corrected == want.corrected[j]);
        CHECK(got.per_class[j].value >= 0.0);
      }
    }
  }

  TEST_CASE("objective equals value unless some class is corrected (property)") {
    oracle::Gen g(42);
    int corrected_batches = 0;
    for (int t = 0; t < 500; ++t) {
      Batch b = random_batch(g);
      const auto r = cpu_risk(b.logits, b.labels, ClassPriors(b.pi1, b.pi2), kKinds[t % 3], b.alpha);
      bool any = false;
      for (const auto& pc : r.per_class) {
        CHECK(pc.value >= 0.0);
        any = any || pc.corrected;
        if (!pc.corrected) CHECK(pc.objective == pc.value);
      }
      if (!any) CHECK(r.objective_value == r.value);
      corrected_batches += any;
    }
    CHECK(corrected_batches > 0);
  }

  TEST_CASE("parallel, serial and reference kernels agree exactly (property)") {
    oracle::Gen g(43);
    for (int t = 0; t < 100; ++t) {
      const Batch b = random_batch(g);
      const ClassPriors pri(b.pi1, b.pi2);
      const UMode mode = t % 2 ? UMode::kFull : UMode::kComplement;
      const auto par = cpu_risk_with_grad(b.logits, b.labels, pri, kKinds[t % 3], b.alpha, mode, Exec::kParallel);
      const auto ser = cpu_risk_with_grad(b.logits, b.labels, pri, kKinds[t % 3], b.alpha, mode, Exec::kSerial);
      const auto ref = reference::cpu_risk_with_grad(b.logits, b.labels, pri, kKinds[t % 3], b.alpha, mode);
      CHECK(par.report == ser.report);
      CHECK(par.grad == ser.grad);
      CHECK(oracle::rel_err(ref.report.objective_value, par.report.objective_value) < 1e-12);
      CHECK(oracle::rel_err(ref.grad.data, par.grad.data) < 1e-12);
      CHECK(cpu_risk_grad(b.logits, b.labels, pri, kKinds[t % 3], b.alpha, mode) == par.grad);
      CHECK(cpu_risk(b.logits, b.labels, pri, kKinds[t % 3], b.alpha, mode) == par.report);
    }
  }

  TEST_CASE("gradient with respect to logits matches central differences") {
    oracle::Gen g(44);
    int checked = 0;
    int corrected = 0;
    for (int t = 0; checked < 60 && t < 1000; ++t) {
      Batch b = random_batch(g, 3.0);
      const auto& kind = kKinds[t % 3];
      const UMode mode = t % 2 ? UMode::kFull : UMode::kComplement;
      if (kink_distance(b, kind, mode == UMode::kFull) < 1e-3) continue;
      const ClassPriors pri(b.pi1, b.pi2);
      const auto an = cpu_risk_with_grad(b.logits, b.labels, pri, kind, b.alpha, mode);
      std::vector<double> fd(b.logits.data.size());
      for (std::size_t k = 0; k < fd.size(); ++k) {
        fd[k] = oracle::central_diff(
            [&](double v) {
              Matrix z = b.logits;
              z.data[k] = v;
              return cpu_risk(z, b.labels, pri, kind, b.alpha, mode).objective_value;
            },
            b.logits.data[k]);
      }
      CHECK(oracle::rel_err(an.grad.data, fd, 1e-8) < 1e-4);
      for (const auto& pc : an.report.per_class) corrected += pc.corrected;
      ++checked;
    }
    CHECK(checked == 60);
    CHECK(corrected > 0);
  }

  TEST_CASE("thread count does not change results") {
    oracle::Gen g(45);
    const Batch b = random_batch(g);
    const ClassPriors pri(b.pi1, b.pi2);
    CpuRiskWithGrad one;
    {
      ThreadCountGuard guard(1);
      one = cpu_risk_with_grad(b.logits, b.labels, pri, BinaryLossKind::scaled_sjs(), b.alpha);
    }
    ThreadCountGuard guard(4);
    const auto four = cpu_risk_with_grad(b.logits, b.labels, pri, BinaryLossKind::scaled_sjs(), b.alpha);
    CHECK(one.report == four.report);
    CHECK(one.grad == four.grad);
  }

  TEST_CASE("input validation") {
    const ClassPriors pri(0.1, 0.5);
    const auto k = BinaryLossKind::kl();
    Matrix z(3, 3, 0.1);
    CHECK_THROWS_AS(cpu_risk(z, std::vector<ClassIndex>{0, 0, 0}, pri, k, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cpu_risk(z, std::vector<ClassIndex>{0, 1}, pri, k, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cpu_risk(z, std::vector<ClassIndex>{0, 1, 3}, pri, k, 0.5), std::invalid_argument);
    Matrix one(1, 3, 0.1);
    CHECK_THROWS_AS(cpu_risk(one, std::vector<ClassIndex>{0}, pri, k, 0.5), std::invalid_argument);
    z(1, 1) = NAN;
    CHECK_THROWS_AS(cpu_risk(z, std::vector<ClassIndex>{0, 1, 2}, pri, k, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ClassPriors(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ClassPriors(0.1, 1.5), std::invalid_argument);
  }
}
