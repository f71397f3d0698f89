#include "doctest.h"

#include "fidex/instance.hpp"
#include "support.hpp"

using namespace fidex;
using namespace fidex::testing;

namespace {

std::string nested_json(bool ascending) {
  std::string a = R"({"name":"wide","weights":[1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1]})";
  std::string b = R"({"name":"mid","weights":[1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,0,0,0]})";
  std::string c = R"({"name":"narrow","weights":[1,1,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]})";
  const std::string arms = ascending ? c + "," + b + "," + a : a + "," + b + "," + c;
  return R"({"version":1,"H":30,"arms":[)" + arms + "]}";
}

}  // namespace

TEST_CASE("parsing canonicalizes by mean") {
  const Instance inst = parse_instance(nested_json(false));
  CHECK(inst.num_arms == 3);
  CHECK(inst.max_reward == 30);
  CHECK(inst.means == std::vector<Rat>{Rat(15), Rat(10), Rat(5)});
  CHECK(inst.names == std::vector<std::string>{"wide", "mid", "narrow"});
  CHECK(inst.input_to_canonical == std::vector<int>{0, 1, 2});
}

TEST_CASE("ascending input reverses the permutation") {
  const Instance inst = parse_instance(nested_json(true));
  CHECK(inst.means == std::vector<Rat>{Rat(15), Rat(10), Rat(5)});
  CHECK(inst.names == std::vector<std::string>{"wide", "mid", "narrow"});
  CHECK(inst.input_to_canonical == std::vector<int>{2, 1, 0});
}

TEST_CASE("bad documents are rejected") {
  CHECK_THROWS_AS(parse_instance("not json"), InputError);
  CHECK_THROWS_AS(parse_instance(R"({"version":2,"H":1,"arms":[]})"), InputError);
  // A weight row summing to zero.
  CHECK_THROWS_AS(
      parse_instance(R"({"version":1,"H":1,"arms":[{"name":"a","weights":[0,0]},{"name":"b","weights":[1,1]}]})"),
      InputError);
  // K < 2.
  CHECK_THROWS_AS(
      parse_instance(R"({"version":1,"H":1,"arms":[{"name":"a","weights":[1,1]}]})"),
      InputError);
  // Wrong weight count.
  CHECK_THROWS_AS(
      parse_instance(R"({"version":1,"H":2,"arms":[{"name":"a","weights":[1,1]},{"name":"b","weights":[1,1,1]}]})"),
      InputError);
  // Fractional weight (also what an int64 overflow parses into).
  CHECK_THROWS_AS(
      parse_instance(R"({"version":1,"H":1,"arms":[{"name":"a","weights":[1.5,1]},{"name":"b","weights":[1,1]}]})"),
      InputError);
}

TEST_CASE("json serialization round-trips") {
  const Instance inst = parse_instance(nested_json(true));
  const Instance again = parse_instance(instance_to_json(inst));
  CHECK(again.means == inst.means);
  CHECK(again.names == inst.names);
  for (int i = 0; i < inst.num_arms; ++i) {
    CHECK(again.arms[i].probs() == inst.arms[i].probs());
  }
}

TEST_CASE("pmf moments") {
  const RewardPmf uniform31 = RewardPmf::from_weights(uniform_weights(30, 30));
  CHECK(uniform31.mean() == Rat(15));

  const RewardPmf point = RewardPmf::from_weights(weights({0, 0, 0, 1}));
  CHECK(point.mean() == Rat(3));
  CHECK(point.support_min() == 3);

  const RewardPmf bern = RewardPmf::from_weights(weights({2, 3}));
  CHECK(bern.mean() == Rat(3, 5));
}

TEST_CASE("pmf cdf") {
  const RewardPmf uniform11 = RewardPmf::from_weights(uniform_weights(10, 10));
  CHECK(uniform11.cdf(10) == Rat(1));
  CHECK(uniform11.cdf(6) == Rat(7, 11));
  CHECK(uniform11.cdf(-1) == Rat(0));
  CHECK_THROWS_AS(uniform11.cdf(11), InputError);
  CHECK_THROWS_AS(uniform11.cdf(-2), InputError);

  std::vector<BigInt> w(11, BigInt(0));
  w[5] = 1;
  const RewardPmf point5 = RewardPmf::from_weights(w);
  CHECK(point5.cdf(4) == Rat(0));
  CHECK(point5.cdf(5) == Rat(1));
}

TEST_CASE("pr_less handles integral and fractional thresholds") {
  const RewardPmf uniform11 = RewardPmf::from_weights(uniform_weights(10, 10));
  CHECK(uniform11.pr_less(Rat(3)) == Rat(3, 11));      // strictly below 3
  CHECK(uniform11.pr_less(Rat(7, 2)) == Rat(4, 11));   // below 3.5 = {0..3}
  CHECK(uniform11.pr_less(Rat(0)) == Rat(0));
  CHECK(uniform11.pr_less(Rat(100)) == Rat(1));
}

TEST_CASE("assumption report") {
  CHECK(validate(*nested_k3h30()).ic_assumption_holds);
  CHECK(validate(*nested_k3h30()).strict_mean_gap_holds);

  // X1 identically H: Pr(X1 < mu_2) = 0, so the pair (1,2) violates.
  const Instance degenerate =
      make_instance(1, {{"a", weights({0, 1})}, {"b", weights({1, 1})}});
  const AssumptionReport report = validate(degenerate);
  CHECK_FALSE(report.ic_assumption_holds);
  CHECK(report.violating_pairs == std::vector<std::pair<int, int>>{{0, 1}});

  // Equal means: the strict gap fails while the IC assumption can still hold.
  const Instance tied =
      make_instance(1, {{"a", weights({1, 1})}, {"b", weights({1, 1})}});
  CHECK_FALSE(validate(tied).strict_mean_gap_holds);
}

TEST_CASE("exploration margin on the toy instance") {
  const MarginPair mp = exploration_margin(*toy_k2h1());
  // Candidates are (mu_i - c) * (1 - 1/(4H(H+1))) = (mu_i - c) * 7/8. The
  // mu_1-based candidate leaves gamma = 0, so the winner comes from mu_2:
  // xi = (1/2)(7/8), gamma = min(Pr(X2=0), Pr(X1=0)) = 2/5, and
  // B = ceil(1 / (7/16 * 2/5)) + 1 = ceil(40/7) + 1 = 7.
  CHECK(mp.xi == Rat(7, 16));
  CHECK(mp.gamma == Rat(2, 5));
  CHECK(mp.phase_length == 7);
  CHECK(margin_pair_valid(*toy_k2h1(), mp));
}

TEST_CASE("exploration margin fails when some arm can never win") {
  // mu_2 = 1 equals X2's only support point and X1 never falls below 1.
  const Instance inst =
      make_instance(2, {{"a", weights({1, 0, 1})}, {"b", weights({0, 1, 0})}});
  CHECK_THROWS_AS(exploration_margin(inst), InputError);
}

TEST_CASE("exploration margin exists for the nested uniform instance") {
  const MarginPair mp = exploration_margin(*nested_k4h40());
  CHECK(mp.gamma > 0);
  CHECK(mp.xi > 0);
  CHECK(margin_pair_valid(*nested_k4h40(), mp));
}

TEST_CASE("superiority gap") {
  CHECK(superiority_gap(*toy_k2h1()) == Rat(1, 5));

  const Instance same =
      make_instance(1, {{"a", weights({0, 1})}, {"b", weights({0, 1})}});
  CHECK(superiority_gap(same) == Rat(0));

  const Instance dominated =
      make_instance(1, {{"a", weights({0, 1})}, {"b", weights({1, 0})}});
  CHECK(superiority_gap(dominated) == Rat(0));
}

TEST_CASE("prop5 construction") {
  GenParams params{10, 10, Rat(1, 1000000), 0};
  const Instance inst = generate(Family::Prop5, params);
  CHECK(inst.num_arms == 10);
  CHECK(inst.mean(0) == Rat(1));
  CHECK(inst.arms[0].prob(1) == Rat(1));
  for (int i = 1; i < 10; ++i) {
    CHECK(inst.arms[i].prob(10) == Rat(1, 10) - Rat(1, 1000000));
    CHECK(inst.mean(i) < Rat(1));
  }
  params.eps = Rat(1, 5);
  CHECK_THROWS_AS(generate(Family::Prop5, params), InputError);  // eps >= 1/H
}

TEST_CASE("prop7 construction") {
  const GenParams params{10, 10, Rat(1, 1000000), 0};
  const Instance inst = generate(Family::Prop7, params);
  CHECK(inst.arms[0].prob(0) == Rat(1, 2) - Rat(1, 1000000));
  CHECK(inst.arms[0].prob(2) == Rat(1, 2) + Rat(1, 1000000));
  CHECK(inst.arms[1].prob(1) == Rat(1));
  CHECK(inst.mean(0) > inst.mean(1));
  CHECK(inst.mean(1) == Rat(1));
}

TEST_CASE("prop9 uniform construction") {
  const GenParams params{5, 10, Rat(1, 100), 0};
  const Instance inst = generate(Family::Prop9Uniform, params);
  for (int i = 1; i < 5; ++i) {
    for (int c = 0; c <= 10; ++c) CHECK(inst.arms[i].prob(c) == Rat(1, 11));
  }
  CHECK(inst.arms[0].prob(0) == Rat(99, 100) / 11);
  CHECK(inst.arms[0].prob(10) == Rat(99, 100) / 11 + Rat(1, 100));
  CHECK(inst.mean(0) > inst.mean(1));
}

TEST_CASE("uniform family reproduces the nested examples") {
  const Instance k3 = generate(Family::Uniform, GenParams{3, 30, Rat(0), 0});
  CHECK(k3.means == std::vector<Rat>{Rat(15), Rat(10), Rat(5)});
  const Instance k4 = generate(Family::Uniform, GenParams{4, 40, Rat(0), 0});
  CHECK(k4.means == std::vector<Rat>{Rat(20), Rat(15), Rat(10), Rat(5)});
}

TEST_CASE("random family is canonical and reproducible") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GenParams params{3, 3, Rat(0), seed};
    const Instance a = generate(Family::Random, params);
    const Instance b = generate(Family::Random, params);
    CHECK(a.means == b.means);
    for (std::size_t i = 1; i < a.means.size(); ++i) {
      CHECK(a.means[i - 1] >= a.means[i]);
    }
  }
}
