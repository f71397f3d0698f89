#include "doctest.h"

#include "fidex/audit.hpp"
#include "support.hpp"

using namespace fidex;
using namespace fidex::testing;

namespace {

History history_of(const Instance& inst, std::initializer_list<std::pair<int, int>> obs) {
  History h;
  h.reset(inst.num_arms);
  for (const auto& [arm, reward] : obs) h.add(arm, reward);
  return h;
}

Portfolio mix(std::initializer_list<std::pair<int, Rat>> entries) {
  Portfolio p;
  for (const auto& e : entries) p.entries.push_back(e);
  return p;
}

}  // namespace

TEST_CASE("posterior means") {
  const auto inst = nested_k3h30();
  const History empty = history_of(*inst, {});
  CHECK(posterior_mean(*inst, empty, 1) == Rat(10));

  const History h2 = history_of(*inst, {{1, 3}});
  CHECK(posterior_mean(*inst, h2, 1) == Rat(3));

  const History h1 = history_of(*inst, {{0, 8}});
  CHECK(posterior_mean(*inst, h1, 2) == Rat(5));
}

TEST_CASE("ex-ante check") {
  const auto inst = nested_k3h30();
  const History h = history_of(*inst, {{0, 8}});

  const CheckResult boundary = check_eair(*inst, h, mix({{1, Rat(3, 5)}, {2, Rat(2, 5)}}));
  CHECK(boundary.pass);
  CHECK(boundary.margin == Rat(0));

  const CheckResult bad = check_eair(*inst, h, Portfolio::point(2));
  CHECK_FALSE(bad.pass);
  CHECK(bad.margin == Rat(-3));

  const History empty = history_of(*inst, {});
  const CheckResult base = check_eair(*inst, empty, Portfolio::point(0));
  CHECK(base.pass);
  CHECK(base.margin == Rat(0));
}

TEST_CASE("ex-post check") {
  const auto inst = nested_k3h30();
  const History h = history_of(*inst, {{0, 8}});

  CHECK(check_epir(*inst, h, Portfolio::point(1)).pass);  // 10 >= 8

  // The boundary mixture passes ex-ante but fails ex-post through arm 3.
  const CheckResult mixed = check_epir(*inst, h, mix({{1, Rat(3, 5)}, {2, Rat(2, 5)}}));
  CHECK_FALSE(mixed.pass);
  CHECK(mixed.margin == Rat(-3));

  const History later = history_of(*inst, {{0, 8}, {1, 17}});
  CHECK(check_epir(*inst, later, Portfolio::point(1)).pass);
}

TEST_CASE("brute force agrees with the planner on the toys") {
  CHECK(brute_force_opt_eair(*toy_k2h1(), BruteForceMode::SimplePolicies) == Rat(4, 5));
  CHECK(brute_force_opt_eair(*toy_k2h2(), BruteForceMode::SimplePolicies) == Rat(19, 15));
  CHECK(plan(toy_k2h1()).root_value == Rat(4, 5));
  CHECK(plan(toy_k2h2()).root_value == Rat(19, 15));
}

TEST_CASE("brute force without exploration returns the default mean") {
  const Instance inst = make_instance(
      2, {{"a", weights({0, 0, 1})}, {"b", weights({1, 1, 0})}});
  CHECK(brute_force_opt_eair(inst, BruteForceMode::SimplePolicies) == Rat(2));
}

TEST_CASE("brute force budget guards") {
  CHECK_THROWS_AS(brute_force_opt_eair(*nested_k4h40(), BruteForceMode::SimplePolicies),
                  BudgetError);
  CHECK_THROWS_AS(brute_force_opt_eair(*nested_k4h40(), BruteForceMode::Grid),
                  BudgetError);
}

TEST_CASE("grid policies never beat the planner") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto inst = std::make_shared<const Instance>(
        generate(Family::Random, GenParams{2 + static_cast<int>(seed % 2), 2, Rat(0), seed}));
    const Rat grid = brute_force_opt_eair(*inst, BruteForceMode::Grid);
    CHECK(grid <= plan(inst).root_value);
  }
}

TEST_CASE("benchmarks on the toy collapse to one value") {
  const WelfareBenchmarks b = welfare_benchmarks(toy_k2h1());
  CHECK(b.opt == Rat(4, 5));
  CHECK(b.opt_eair == Rat(4, 5));
  CHECK(b.opt_epir == Rat(4, 5));
  CHECK(b.opt_del == Rat(4, 5));
}

TEST_CASE("benchmark chain holds on generated instances") {
  std::vector<std::shared_ptr<const Instance>> suite{
      toy_k2h1(), toy_k2h2(), nested_k3h30(),
      std::make_shared<const Instance>(generate(Family::Prop5, {6, 6, Rat(1, 100), 0})),
      std::make_shared<const Instance>(generate(Family::Prop7, {6, 6, Rat(1, 100), 0})),
      std::make_shared<const Instance>(
          generate(Family::Prop9Uniform, {4, 8, Rat(1, 100), 0}))};
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    suite.push_back(std::make_shared<const Instance>(
        generate(Family::Random, GenParams{3, 3, Rat(0), seed * 7})));
  }
  for (const auto& inst : suite) {
    const WelfareBenchmarks b = welfare_benchmarks(inst);
    CHECK(b.opt >= b.opt_eair);
    CHECK(b.opt_eair >= b.opt_epir);
    CHECK(b.opt_epir >= b.opt_del);
    CHECK(b.opt_del >= inst->mean(0));
  }
}

TEST_CASE("prop5 pins the constrained optimum at the default mean") {
  const auto inst = std::make_shared<const Instance>(
      generate(Family::Prop5, {10, 10, Rat(1, 1000000), 0}));
  const WelfareBenchmarks b = welfare_benchmarks(inst);
  CHECK(b.opt_eair == Rat(1));
  CHECK(to_double(b.opt / b.opt_eair) > 6.3);
}

TEST_CASE("prop7 delegate value") {
  const Rat eps(1, 1000000);
  const auto inst =
      std::make_shared<const Instance>(generate(Family::Prop7, {10, 10, eps, 0}));
  const WelfareBenchmarks b = welfare_benchmarks(inst);
  // Greedy stops at R1 = 2 and otherwise settles on arm 2's sure reward 1.
  CHECK(b.opt_del == (Rat(1, 2) + eps) * 2 + (Rat(1, 2) - eps) * 1);
}

TEST_CASE("uniform-arrival threshold") {
  CHECK(ic_threshold_uniform(*toy_k2h1()) == 360);

  // A larger gap can only lower the bound: two fair coins give delta = 1/4.
  const Instance easier = make_instance(
      1, {{"a", weights({1, 1})}, {"b", weights({1, 1})}});
  CHECK(superiority_gap(easier) == Rat(1, 4));
  CHECK(ic_threshold_uniform(easier) <= 360);

  // K-dominated branch: eight fair coins give delta = 1/256 and
  // K = 8 > ln(1024), so the bound is exactly 24 * 256 * 8.
  std::vector<std::pair<std::string, std::vector<BigInt>>> coins;
  for (int i = 0; i < 8; ++i) coins.emplace_back("c" + std::to_string(i), weights({1, 1}));
  const Instance fair = make_instance(1, std::move(coins));
  CHECK(superiority_gap(fair) == Rat(1, 256));
  CHECK(ic_threshold_uniform(fair) == 24 * 256 * 8);

  const Instance degenerate = make_instance(
      1, {{"a", weights({0, 1})}, {"b", weights({0, 1})}});
  CHECK_THROWS_AS(ic_threshold_uniform(degenerate), InputError);
}

TEST_CASE("exact ic check accepts the phased mechanism at its proper length") {
  // K=3, H=1 with means 3/5, 1/2, 2/5. The margin machinery yields B = 16;
  // one full phase fits in n = K + B = 19.
  const auto inst = std::make_shared<const Instance>(make_instance(
      1, {{"a", weights({2, 3})}, {"b", weights({1, 1})}, {"c", weights({3, 2})}}));
  const MarginPair margin = exploration_margin(*inst);
  CHECK(margin.phase_length == 16);

  const auto policy = std::make_shared<const Policy>(plan(inst));
  IcCheckConfig config;
  config.mech = MechConfig{MechKind::IcFee, margin};
  config.horizon = 3 + static_cast<int>(margin.phase_length);
  const AuditReport report = check_ic_exact(inst, policy, config);
  CHECK(report.any_checked);
  CHECK(report.all_pass);
  CHECK(report.worst_margin >= 0);
}

TEST_CASE("exact ic check accepts the epir-phased mechanism") {
  for (const auto& inst : {toy_k2h1(), std::make_shared<const Instance>(make_instance(
                              1, {{"a", weights({2, 3})},
                                  {"b", weights({1, 1})},
                                  {"c", weights({3, 2})}}))}) {
    const MarginPair margin = exploration_margin(*inst);
    IcCheckConfig config;
    config.mech = MechConfig{MechKind::IcEpFee, margin};
    config.horizon = inst->num_arms + static_cast<int>(margin.phase_length);
    const AuditReport report = check_ic_exact(inst, nullptr, config);
    CHECK(report.any_checked);
    CHECK(report.all_pass);
  }
}

TEST_CASE("exact ic check flags a non-ic mechanism") {
  // Full exploration recommends a2 unconditionally in round 2; an agent
  // there nets mu_2 - mu_1 = -1/10 against the default arm.
  IcCheckConfig config;
  config.mech = MechConfig{MechKind::FullX, std::nullopt};
  config.horizon = 3;
  const AuditReport report = check_ic_exact(toy_k2h1(), nullptr, config);
  CHECK_FALSE(report.all_pass);
  bool found = false;
  for (const AuditRow& row : report.rows) {
    if (row.round == 2 && row.constraint.find("rec=a2 alt=a1") != std::string::npos) {
      CHECK(row.margin == Rat(-1, 10));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("exact ic check round-one margins are the mean gaps") {
  const auto inst = toy_k2h1();
  MarginPair margin = exploration_margin(*inst);
  IcCheckConfig config;
  config.mech = MechConfig{MechKind::IcFee, margin};
  config.horizon = 2;
  const auto policy = std::make_shared<const Policy>(plan(inst));
  const AuditReport report = check_ic_exact(inst, policy, config);
  bool found = false;
  for (const AuditRow& row : report.rows) {
    if (row.round == 1) {
      CHECK(row.constraint.find("rec=a1") != std::string::npos);
      CHECK(row.margin == Rat(3, 5) - Rat(1, 2));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("ic enumeration budget") {
  IcCheckConfig config;
  config.mech = MechConfig{MechKind::FullX, std::nullopt};
  config.horizon = 3;
  config.max_paths = 1;
  CHECK_THROWS_AS(check_ic_exact(toy_k2h1(), nullptr, config), BudgetError);
}
