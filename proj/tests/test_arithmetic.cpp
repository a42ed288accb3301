#include <catch2/catch_amalgamated.hpp>

#include "delta/arithmetic.hpp"
#include "oracle_helpers.hpp"

using namespace delta;

namespace {

NetworkSpec small_spec() {
  NetworkSpec s;
  s.layer_dims = {3, 4, 2};
  s.activation = Activation::tanh;
  s.bias = true;
  return s;
}

TaskVector random_tau(const ParameterVector& base, std::uint64_t seed, const char* id) {
  Rng rng(seed);
  Vec v = oracle::random_vec(rng, base.values.size(), 0.3);
  return make_task_vector(std::move(v), id, "test", base);
}

}  // namespace

TEST_CASE("compose: empty list returns theta0") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 1);
  auto out = compose(theta0, std::vector<std::pair<double, TaskVector>>{});
  REQUIRE(out.values == theta0.values);
}

TEST_CASE("compose: cancellation recovers theta0") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 2);
  auto tau = random_tau(theta0, 3, "t0");
  auto out = compose(theta0, {{1.0, tau}, {-1.0, tau}});
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    REQUIRE(std::abs(out.values[i] - theta0.values[i]) <= 1e-12);
  }
}

TEST_CASE("compose: permutation changes little") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 4);
  auto t1 = random_tau(theta0, 5, "a");
  auto t2 = random_tau(theta0, 6, "b");
  auto t3 = random_tau(theta0, 7, "c");
  auto fwd = compose(theta0, {{0.3, t1}, {0.5, t2}, {0.9, t3}});
  auto rev = compose(theta0, {{0.9, t3}, {0.5, t2}, {0.3, t1}});
  for (std::size_t i = 0; i < fwd.values.size(); ++i) {
    REQUIRE(std::abs(fwd.values[i] - rev.values[i]) <= 1e-9);
  }
}

TEST_CASE("compose is affine in the coefficient") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 8);
  auto tau = random_tau(theta0, 9, "t");
  double a = 0.37;
  auto scaled = compose(theta0, {{a, tau}});
  auto unit = compose(theta0, {{1.0, tau}});
  for (std::size_t i = 0; i < scaled.values.size(); ++i) {
    double lhs = scaled.values[i] - theta0.values[i];
    double rhs = a * (unit.values[i] - theta0.values[i]);
    REQUIRE(std::abs(lhs - rhs) <= 1e-15 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("compose never mutates inputs") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 10);
  auto tau = random_tau(theta0, 11, "t");
  auto theta_copy = theta0.values;
  auto tau_copy = tau.values;
  (void)compose(theta0, {{0.7, tau}});
  REQUIRE(theta0.values == theta_copy);
  REQUIRE(tau.values == tau_copy);
}

TEST_CASE("hash mismatch is a hard error naming the task") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 12);
  auto other = oracle::random_params(s, 13);
  auto tau = random_tau(other, 14, "rogue");
  REQUIRE_THROWS_WITH(compose(theta0, {{1.0, tau}}),
                      Catch::Matchers::ContainsSubstring("rogue"));
}

TEST_CASE("negate") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 15);
  auto tau = random_tau(theta0, 16, "t");

  auto noop = negate(theta0, tau, 0.0);
  REQUIRE(noop.values == theta0.values);

  double alpha = 0.6;
  auto merged = compose(theta0, {{alpha, tau}});
  // negate() checks the base hash, which changed after composing; rebuild
  // the task vector against the merged base to test the inverse property.
  auto tau_on_merged = make_task_vector(tau.values, "t", "test", merged);
  auto back = negate(merged, tau_on_merged, alpha);
  for (std::size_t i = 0; i < back.values.size(); ++i) {
    REQUIRE(std::abs(back.values[i] - theta0.values[i]) <= 1e-12);
  }
}

TEST_CASE("alpha_sweep basics") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 17);
  auto tau = random_tau(theta0, 18, "t");

  auto zero_only = alpha_sweep(theta0, tau, {0.0}, [&](const ParameterVector& th) {
    return th.values[0];
  });
  REQUIRE(zero_only.curve.size() == 1);
  REQUIRE(zero_only.curve[0].metric == theta0.values[0]);

  auto flat = alpha_sweep(theta0, tau, {0.1, 0.2, 0.3},
                          [](const ParameterVector&) { return 42.0; });
  REQUIRE(flat.argmax == 0);  // tie-break: smallest alpha
  REQUIRE(flat.argmin == 0);

  REQUIRE_THROWS_AS(alpha_sweep(theta0, tau, {}, [](const ParameterVector&) { return 0.0; }),
                    ConfigError);
  REQUIRE_THROWS_AS(
      alpha_sweep(theta0, tau, {0.2, 0.1}, [](const ParameterVector&) { return 0.0; }),
      ConfigError);
}

TEST_CASE("alpha_sweep argmax is invariant under monotone transforms") {
  auto s = small_spec();
  auto theta0 = oracle::random_params(s, 19);
  auto tau = random_tau(theta0, 20, "t");
  auto grid = uniform_grid(0.1, 1.0, 0.1);
  auto metric = [&](const ParameterVector& th) { return -squared_norm(th.values); };
  auto base = alpha_sweep(theta0, tau, grid, metric);
  auto mono = alpha_sweep(theta0, tau, grid, [&](const ParameterVector& th) {
    return std::tanh(metric(th) * 0.25 + 3.0);
  });
  REQUIRE(base.argmax == mono.argmax);
}

TEST_CASE("uniform_grid endpoints") {
  auto g = uniform_grid(0.1, 2.0, 0.1);
  REQUIRE(g.size() == 20);
  REQUIRE(g.front() == Catch::Approx(0.1));
  REQUIRE(g.back() == Catch::Approx(2.0));
}
