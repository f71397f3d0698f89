#include "doctest.h"

#include <cmath>

#include "fidex/audit.hpp"
#include "fidex/sim.hpp"
#include "support.hpp"

using namespace fidex;
using namespace fidex::testing;

TEST_CASE("realizations are reproducible and respect point masses") {
  const Instance point = make_instance(
      2, {{"a", weights({0, 0, 1})}, {"b", weights({0, 1, 0})}});
  StreamSource src(9);
  const Realization r = sample_realization(point, src);
  CHECK(r.rewards == std::vector<int>{2, 1});

  StreamSource a(123), b(123);
  CHECK(sample_realization(*nested_k3h30(), a).rewards ==
        sample_realization(*nested_k3h30(), b).rewards);
}

TEST_CASE("realization sampling matches the exact mean") {
  const auto inst = nested_k3h30();
  StreamSource src(2024);
  double sum = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    sum += sample_realization(*inst, src).rewards[0];
  }
  const double mean = sum / draws;
  const double se = std::sqrt(31.0 * 31.0 / 12.0 / draws);
  CHECK(std::abs(mean - 15.0) <= 3 * se);
}

TEST_CASE("full exploration episode pattern") {
  const auto inst = nested_k3h30();
  EpisodeOptions opts;
  opts.collect_rounds = true;
  opts.full = true;
  const EpisodeTrace t = run_episode(inst, MechConfig{MechKind::FullX, {}}, nullptr, 5, 7, 0, opts);
  REQUIRE(t.rounds.size() == 5);
  CHECK(t.rounds[0].arm == 0);
  CHECK(t.rounds[1].arm == 1);
  CHECK(t.rounds[2].arm == 2);
  const int best = t.rounds[3].arm;
  CHECK(t.rounds[4].arm == best);
  // Reward consistency: replaying an arm yields the same reward.
  CHECK(t.rounds[3].reward == t.realization.rewards[best]);
}

TEST_CASE("single-round episode") {
  const auto inst = toy_k2h1();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  EpisodeOptions opts;
  opts.collect_rounds = true;
  const EpisodeTrace t =
      run_episode(inst, MechConfig{MechKind::Fee, {}}, policy, 1, 1, 0, opts);
  REQUIRE(t.rounds.size() == 1);
  CHECK(t.rounds[0].arm == 0);
  CHECK(t.welfare == Rat(t.rounds[0].reward));
}

TEST_CASE("traces are deterministic in the seed") {
  const auto inst = nested_k4h40();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  EpisodeOptions opts;
  opts.collect_rounds = true;
  opts.full = true;
  for (std::uint64_t episode = 0; episode < 4; ++episode) {
    const EpisodeTrace a =
        run_episode(inst, MechConfig{MechKind::Fee, {}}, policy, 30, 99, episode, opts);
    const EpisodeTrace b =
        run_episode(inst, MechConfig{MechKind::Fee, {}}, policy, 30, 99, episode, opts);
    CHECK(a.realization.rewards == b.realization.rewards);
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (std::size_t i = 0; i < a.rounds.size(); ++i) {
      CHECK(a.rounds[i].arm == b.rounds[i].arm);
      CHECK(a.rounds[i].reward == b.rounds[i].reward);
      CHECK(a.rounds[i].portfolio.entries == b.rounds[i].portfolio.entries);
    }
    CHECK(a.welfare == b.welfare);
  }
}

TEST_CASE("absorption shortcut matches the full run") {
  const auto inst = toy_k2h2();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  for (std::uint64_t episode = 0; episode < 12; ++episode) {
    EpisodeOptions full;
    full.full = true;
    const EpisodeTrace a =
        run_episode(inst, MechConfig{MechKind::Fee, {}}, policy, 200, 5, episode, full);
    const EpisodeTrace b =
        run_episode(inst, MechConfig{MechKind::Fee, {}}, policy, 200, 5, episode);
    CHECK(a.welfare == b.welfare);
    CHECK(a.primary_rounds == b.primary_rounds);
    CHECK(a.secondary_rounds == b.secondary_rounds);
  }
}

TEST_CASE("per-round rewards never contradict the realization") {
  const auto inst = nested_k3h30();
  EpisodeOptions opts;
  opts.collect_rounds = true;
  opts.full = true;
  for (std::uint64_t episode = 0; episode < 8; ++episode) {
    const EpisodeTrace t = run_episode(inst, MechConfig{MechKind::Greedy, {}}, nullptr,
                                       20, 31, episode, opts);
    for (const RoundRecord& r : t.rounds) {
      CHECK(r.reward == t.realization.rewards[r.arm]);
    }
  }
}

TEST_CASE("arrival scheme leaves welfare untouched") {
  const auto inst = nested_k3h30();
  EpisodeOptions known;
  known.full = true;
  EpisodeOptions uniform;
  uniform.full = true;
  uniform.arrival = ArrivalKind::UniformPermutation;
  uniform.collect_rounds = true;
  for (std::uint64_t episode = 0; episode < 6; ++episode) {
    const EpisodeTrace a = run_episode(inst, MechConfig{MechKind::FullX, {}}, nullptr,
                                       12, 17, episode, known);
    const EpisodeTrace b = run_episode(inst, MechConfig{MechKind::FullX, {}}, nullptr,
                                       12, 17, episode, uniform);
    CHECK(a.welfare == b.welfare);
    // The permutation relabels agents without touching outcomes.
    std::vector<bool> seen(13, false);
    for (const RoundRecord& r : b.rounds) {
      CHECK(r.agent >= 1);
      CHECK(r.agent <= 12);
      CHECK_FALSE(seen[static_cast<std::size_t>(r.agent)]);
      seen[static_cast<std::size_t>(r.agent)] = true;
    }
  }
}

TEST_CASE("welfare estimation converges on the toy") {
  const auto inst = toy_k2h1();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  const WelfareEstimate est =
      estimate_welfare(inst, MechConfig{MechKind::Fee, {}}, policy, 100, 20000, 42);
  // E[SW_n] = 4/5 - 1/(5n); the deterministic part of the gap bound is
  // (K + KH)(4/5 - 3/5)/n = 0.8/n.
  CHECK(std::abs(est.mean - 0.8) <= 0.8 / 100 + 3 * est.std_error);
  CHECK(est.mean_n1 <= 2.0);
  CHECK(welfare_gap(Rat(4, 5), est) ==
        doctest::Approx(100 * (0.8 - est.mean)).epsilon(1e-12));
}

TEST_CASE("single run reports a zero standard error") {
  const auto inst = toy_k2h1();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  const WelfareEstimate est =
      estimate_welfare(inst, MechConfig{MechKind::Fee, {}}, policy, 10, 1, 3);
  CHECK(est.std_error == 0.0);
  CHECK(est.runs == 1);
}

TEST_CASE("threaded estimation is deterministic per thread count") {
  const auto inst = toy_k2h2();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  const WelfareEstimate a =
      estimate_welfare(inst, MechConfig{MechKind::Fee, {}}, policy, 50, 4000, 11, 3);
  const WelfareEstimate b =
      estimate_welfare(inst, MechConfig{MechKind::Fee, {}}, policy, 50, 4000, 11, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  // And single-threaded agrees to the last bit with itself.
  const WelfareEstimate c =
      estimate_welfare(inst, MechConfig{MechKind::Fee, {}}, policy, 50, 4000, 11, 1);
  const WelfareEstimate d =
      estimate_welfare(inst, MechConfig{MechKind::Fee, {}}, policy, 50, 4000, 11, 1);
  CHECK(c.mean == d.mean);
}

TEST_CASE("phase statistics require fee traces") {
  const auto inst = toy_k2h1();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  std::vector<EpisodeTrace> traces;
  for (std::uint64_t e = 0; e < 20; ++e) {
    traces.push_back(run_episode(inst, MechConfig{MechKind::Fee, {}}, policy, 30, 8, e));
  }
  const auto [n1, n2] = phase_stats(traces);
  CHECK(n1 <= 2.0);
  CHECK(n2 == 0.0);  // two arms leave nothing for secondary exploration

  traces.push_back(run_episode(inst, MechConfig{MechKind::Greedy, {}}, nullptr, 5, 8, 0));
  CHECK_THROWS_AS(phase_stats(traces), InputError);
}

TEST_CASE("results csv is stable") {
  const auto inst = toy_k2h1();
  const auto policy = std::make_shared<const Policy>(plan(inst));
  std::vector<ResultRow> rows(1);
  rows[0].mech = "fee";
  rows[0].estimate = estimate_welfare(inst, MechConfig{MechKind::Fee, {}}, policy, 100, 500, 7);
  rows[0].opt = Rat(4, 5);
  rows[0].opt_eair = Rat(4, 5);
  rows[0].gap = welfare_gap(Rat(4, 5), rows[0].estimate);
  const std::string a = results_csv(rows);
  const std::string b = results_csv(rows);
  CHECK(a == b);
  CHECK(a.find("mech,n,runs,seed,mean,std_error,mean_n1,mean_n2,opt,opt_eair,gap\n") == 0);
  CHECK(a.find("fee,100,500,7,") != std::string::npos);
  CHECK(a.find("4/5") != std::string::npos);
}
