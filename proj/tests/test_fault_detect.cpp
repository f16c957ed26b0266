#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "wban/fault_detect.hpp"

using namespace wban;

namespace {

VirtualTime sec(std::uint64_t s) { return VirtualTime{s * 1000}; }

SensorHealth temp_health() {
  SensorHealth h;
  h.lo = 30.0;
  h.hi = 45.0;
  h.eps_max = 0.1;
  return h;
}

}  // namespace

TEST_CASE("predict") {
  auto zero = PredictorModel::zeros(3);
  const std::vector<double> x{0.3, -2.0, 5.0};
  CHECK(predict(zero, x) == 0.0);

  auto sat = PredictorModel::zeros(2);
  sat.weights_out[0] = 1.0;
  sat.bias_hidden[0] = 50.0;
  CHECK(predict(sat, std::vector<double>{0.1, 0.2}) == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(predict(zero, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(predict(zero, std::vector<double>{1.0, NAN, 0.0}), std::domain_error);
}

TEST_CASE("seeded model predictions are reproducible") {
  Rng a(99), b(99);
  const auto ma = PredictorModel::random(3, 4, a);
  const auto mb = PredictorModel::random(3, 4, b);
  const std::vector<double> x{0.1, -0.4, 0.7};
  CHECK(ma == mb);
  CHECK(predict(ma, x) == predict(mb, x));
}

TEST_CASE("parameters round trip in flat order") {
  Rng rng(1);
  auto m = PredictorModel::random(2, 3, rng);
  const auto p = m.parameters();
  CHECK(p.size() == m.parameter_count());
  CHECK(p.size() == 3 * 2 + 3 + 3 + 1);
  CHECK(p.front() == m.weights_in[0]);
  CHECK(p.back() == m.bias_out);
  auto q = p;
  for (auto& v : q) v += 1.0;
  m.set_parameters(q);
  CHECK(m.parameters() == q);
  CHECK_THROWS(m.set_parameters(std::vector<double>(3)));
}

TEST_CASE("train step at zero error leaves the model unchanged") {
  Rng rng(2);
  const auto m = PredictorModel::random(2, 4, rng);
  const std::vector<double> x{0.2, 0.5};
  const auto r = train_step(m, x, predict(m, x));
  CHECK(r.loss == 0.0);
  CHECK(r.model == m);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n_in = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto n_hidden = static_cast<std::size_t>(rng.uniform_int(1, 5));
    const auto m = PredictorModel::random(n_in, n_hidden, rng, 1.0);
    std::vector<double> x(n_in);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const double target = rng.uniform(-1.0, 1.0);
    const auto g = loss_gradient(m, x, target);
    const auto fd = oracle::numeric_gradient(m, x, target);
    REQUIRE(g.size() == fd.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g[i]) < 1e-7 && std::abs(fd[i]) < 1e-7) continue;
      REQUIRE(oracle::relative_error(g[i], fd[i]) < 1e-4);
    }
  }
}

TEST_CASE("train step returns the pre-update loss and descends") {
  Rng rng(3);
  auto m = PredictorModel::random(1, 4, rng);
  const std::vector<double> x{0.5};
  const double before = std::pow(predict(m, x) - 0.9, 2);
  const auto r = train_step(m, x, 0.9);
  CHECK(r.loss == doctest::Approx(before));
  CHECK(std::pow(predict(r.model, x) - 0.9, 2) < before);
}

TEST_CASE("online training fits a linear target") {
  Rng rng(7);
  auto m = PredictorModel::random(1, 4, rng);
  double loss = 1.0;
  for (int step = 0; step < 2000; ++step) {
    const std::vector<double> x{rng.uniform(-1.0, 1.0)};
    auto r = train_step(std::move(m), x, 0.5 * x[0] + 0.2);
    m = std::move(r.model);
    loss = r.loss;
  }
  double mse = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double x = -1.0 + k / 50.0;
    mse += std::pow(predict(m, std::vector<double>{x}) - (0.5 * x + 0.2), 2) / 101;
  }
  CHECK(loss < 1e-3);
  CHECK(mse < 1e-3);
}

TEST_CASE("error rate") {
  CHECK(error_rate(5.0, 5.0, 0.0, 10.0) == 0.0);
  CHECK(error_rate(10.0, 0.0, 0.0, 10.0) == 1.0);
  CHECK(error_rate(38.0, 37.0, 30.0, 45.0) == doctest::Approx(1.0 / 15.0));
  CHECK(error_rate(37.0, 38.0, 30.0, 45.0) == error_rate(38.0, 37.0, 30.0, 45.0));
  CHECK(error_rate(3 * 38.0, 3 * 37.0, 3 * 30.0, 3 * 45.0) == doctest::Approx(error_rate(38.0, 37.0, 30.0, 45.0)));
}

TEST_CASE("valid reading trains and keeps the timer idle") {
  auto r = check_reading(temp_health(), 37.0, 37.0, sec(0));
  CHECK(r.verdict == Verdict::kValid);
  CHECK(r.train);
  CHECK_FALSE(r.health.timer.counting());
}

TEST_CASE("persistent conflict confirms at exactly T_fault") {
  auto h = temp_health();
  for (std::uint64_t s = 0; s <= 5; ++s) {
    auto r = check_reading(h, 44.0, 37.0, sec(s));
    h = r.health;
    CHECK_FALSE(r.train);
    CHECK(r.verdict == (s < 5 ? Verdict::kConflict : Verdict::kFaulty));
  }
  CHECK(h.faulty);
  // Latched: even a perfect reading stays faulty.
  CHECK(check_reading(h, 37.0, 37.0, sec(6)).verdict == Verdict::kFaulty);
  h.reset();
  CHECK(check_reading(h, 37.0, 37.0, sec(7)).verdict == Verdict::kValid);
}

TEST_CASE("out-of-range readings feed the same timer") {
  auto h = temp_health();
  auto r = check_reading(h, 50.0, 50.0, sec(0));
  CHECK(r.verdict == Verdict::kConflict);
  CHECK(r.health.timer.deadline == sec(5));
}

TEST_CASE("a valid reading restarts the timer") {
  auto h = temp_health();
  h = check_reading(h, 44.0, 37.0, sec(0)).health;
  h = check_reading(h, 37.0, 37.0, sec(3)).health;
  for (std::uint64_t s = 4; s < 9; ++s) {
    auto r = check_reading(h, 44.0, 37.0, sec(s));
    CHECK(r.verdict == Verdict::kConflict);
    h = r.health;
  }
  CHECK(check_reading(h, 44.0, 37.0, sec(9)).verdict == Verdict::kFaulty);
}

TEST_CASE("conflict episodes shorter than T_fault never confirm") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    auto h = temp_health();
    std::uint64_t t = 0;
    for (int episode = 0; episode < 10; ++episode) {
      const auto len = static_cast<std::uint64_t>(rng.uniform_int(1, 4999));
      const auto start = t;
      for (; t < start + len; t += 250) {
        auto r = check_reading(h, 44.0, 37.0, VirtualTime{t});
        REQUIRE(r.verdict == Verdict::kConflict);
        h = r.health;
      }
      h = check_reading(h, 37.0, 37.0, VirtualTime{start + len}).health;
      t = start + len + 1;
    }
  }
}

TEST_CASE("health validation") {
  SensorHealth h;
  h.lo = 2.0;
  h.hi = 1.0;
  CHECK_THROWS(h.validate());
  h = temp_health();
  h.eps_max = 0.0;
  CHECK_THROWS(h.validate());
}
