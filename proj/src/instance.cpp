/*
 * Copyright 2026 The fidex authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fidex/instance.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "fidex/rng.hpp"
#include "json.hpp"

namespace fidex {

RewardPmf RewardPmf::from_weights(const std::vector<BigInt>& weights) {
  if (weights.empty()) throw InputError("pmf needs at least one weight");
  BigInt total = 0;
  for (const BigInt& w : weights) {
    if (w < 0) throw InputError("negative pmf weight");
    total += w;
  }
  if (total == 0) throw InputError("pmf weights sum to zero");

  RewardPmf pmf;
  pmf.probs_.reserve(weights.size());
  pmf.cum_.reserve(weights.size());
  Rat running(0);
  Rat mean(0);
  int lo = -1, hi = -1;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    Rat p(weights[c], total);
    if (p > 0) {
      if (lo < 0) lo = static_cast<int>(c);
      hi = static_cast<int>(c);
      mean += p * static_cast<int>(c);
    }
    running += p;
    pmf.probs_.push_back(std::move(p));
    pmf.cum_.push_back(running);
  }
  pmf.mean_ = std::move(mean);
  pmf.support_min_ = lo;
  pmf.support_max_ = hi;
  return pmf;
}

const Rat& RewardPmf::prob(int c) const {
  if (c < 0 || c > h()) throw InputError("reward value out of range");
  return probs_[static_cast<std::size_t>(c)];
}

Rat RewardPmf::cdf(int c) const {
  // c = -1 is allowed so Pr(X <= c-1) queries stay in range at c = 0.
  if (c < -1 || c > h()) throw InputError("cdf argument out of range");
  if (c < 0) return Rat(0);
  return cum_[static_cast<std::size_t>(c)];
}

Rat RewardPmf::pr_less(const Rat& t) const {
  // Pr(X < t) over integer support = Pr(X <= ceil(t) - 1); this covers both
  // integral t (excludes t itself) and fractional t (includes floor(t)).
  const BigInt bound = ceil_rat(t) - 1;
  if (bound < 0) return Rat(0);
  if (bound >= h()) return Rat(1);
  return cdf(static_cast<int>(bound));
}

Instance make_instance(int max_reward,
                       std::vector<std::pair<std::string, std::vector<BigInt>>> input_arms) {
  if (max_reward < 1) throw InputError("H must be at least 1");
  if (input_arms.size() < 2) throw InputError("need at least 2 arms");

  std::vector<RewardPmf> pmfs;
  pmfs.reserve(input_arms.size());
  for (const auto& [name, weights] : input_arms) {
    if (static_cast<int>(weights.size()) != max_reward + 1) {
      throw InputError("arm '" + name + "': weights array must have length H+1");
    }
    pmfs.push_back(RewardPmf::from_weights(weights));
  }

  // Stable sort by non-increasing mean; the first arm after sorting is the
  // default arm. Ties keep input order.
  std::vector<int> order(pmfs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return pmfs[static_cast<std::size_t>(a)].mean() > pmfs[static_cast<std::size_t>(b)].mean();
  });

  Instance inst;
  inst.num_arms = static_cast<int>(pmfs.size());
  inst.max_reward = max_reward;
  inst.input_to_canonical.assign(pmfs.size(), -1);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const int src = order[pos];
    inst.arms.push_back(pmfs[static_cast<std::size_t>(src)]);
    inst.means.push_back(inst.arms.back().mean());
    inst.names.push_back(input_arms[static_cast<std::size_t>(src)].first);
    inst.input_to_canonical[static_cast<std::size_t>(src)] = static_cast<int>(pos);
  }
  return inst;
}

Instance parse_instance(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed instance document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("version") || doc["version"] != 1) {
    throw InputError("instance document must declare version 1");
  }
  if (!doc.contains("H") || !doc["H"].is_number_integer()) {
    throw InputError("instance document must declare integer H");
  }
  const int h = doc["H"].get<int>();
  if (!doc.contains("arms") || !doc["arms"].is_array()) {
    throw InputError("instance document must list arms");
  }

  std::vector<std::pair<std::string, std::vector<BigInt>>> arms;
  int unnamed = 0;
  for (const auto& arm : doc["arms"]) {
    std::string name;
    if (arm.contains("name") && arm["name"].is_string()) {
      name = arm["name"].get<std::string>();
    } else {
      name = "arm" + std::to_string(++unnamed);
    }
    if (!arm.contains("weights") || !arm["weights"].is_array()) {
      throw InputError("arm '" + name + "' is missing its weights array");
    }
    std::vector<BigInt> weights;
    for (const auto& w : arm["weights"]) {
      if (!w.is_number_integer()) {
        throw InputError("arm '" + name + "': weights must be integers (overflow?)");
      }
      weights.emplace_back(w.get<std::int64_t>());
    }
    arms.emplace_back(std::move(name), std::move(weights));
  }
  return make_instance(h, std::move(arms));
}

std::string instance_to_json(const Instance& inst) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["H"] = inst.max_reward;
  doc["arms"] = nlohmann::json::array();
  for (int i = 0; i < inst.num_arms; ++i) {
    nlohmann::json arm;
    arm["name"] = inst.names[static_cast<std::size_t>(i)];
    // Serialize the normalized probabilities back to integer weights over a
    // common denominator.
    const auto& probs = inst.arms[static_cast<std::size_t>(i)].probs();
    BigInt common = 1;
    for (const Rat& p : probs) common = lcm(common, denominator(p));
    nlohmann::json weights = nlohmann::json::array();
    for (const Rat& p : probs) {
      const BigInt w = numerator(p) * (common / denominator(p));
      if (w > std::numeric_limits<std::int64_t>::max()) {
        throw InputError("weights too large to serialize");
      }
      weights.push_back(static_cast<std::int64_t>(w));
    }
    arm["weights"] = std::move(weights);
    doc["arms"].push_back(std::move(arm));
  }
  return doc.dump(2) + "\n";
}

AssumptionReport validate(const Instance& inst) {
  AssumptionReport report;
  for (int i = 0; i < inst.num_arms; ++i) {
    for (int j = i + 1; j < inst.num_arms; ++j) {
      if (inst.arms[static_cast<std::size_t>(i)].pr_less(inst.mean(j)) == 0) {
        report.violating_pairs.emplace_back(i, j);
      }
    }
  }
  report.ic_assumption_holds = report.violating_pairs.empty();
  report.strict_mean_gap_holds = inst.mean(0) > inst.mean(1);
  return report;
}

namespace {

Rat margin_gamma(const Instance& inst, const Rat& xi) {
  Rat gamma;
  bool first = true;
  for (int i = 0; i < inst.num_arms; ++i) {
    Rat product(1);
    const Rat threshold = inst.mean(i) - xi;
    for (int ip = 0; ip < inst.num_arms && product > 0; ++ip) {
      if (ip == i) continue;
      product *= inst.arms[static_cast<std::size_t>(ip)].pr_less(threshold);
    }
    if (first || product < gamma) {
      gamma = product;
      first = false;
    }
  }
  return gamma;
}

}  // namespace

MarginPair exploration_margin(const Instance& inst) {
  const int h = inst.max_reward;
  const Rat shrink = 1 - Rat(1, BigInt(4) * h * (h + 1));
  MarginPair best;
  Rat best_product(-1);
  for (int i = 0; i < inst.num_arms; ++i) {
    for (int c = 0; c <= h; ++c) {
      if (inst.mean(i) <= c) continue;
      const Rat xi = (inst.mean(i) - c) * shrink;
      const Rat gamma = margin_gamma(inst, xi);
      if (gamma <= 0) continue;
      const Rat product = xi * gamma;
      if (product > best_product || (product == best_product && xi > best.xi)) {
        best_product = product;
        best.xi = xi;
        best.gamma = gamma;
      }
    }
  }
  if (best_product <= 0) {
    throw InputError("no exploration margin with gamma > 0 (IC assumption fails)");
  }
  best.phase_length = ceil_to_int64(Rat(h) / best_product) + 1;
  return best;
}

bool margin_pair_valid(const Instance& inst, const MarginPair& mp) {
  if (mp.xi <= 0 || mp.gamma <= 0 || mp.phase_length < 1) return false;
  if (margin_gamma(inst, mp.xi) < mp.gamma) return false;
  return mp.phase_length == ceil_to_int64(Rat(inst.max_reward) / (mp.xi * mp.gamma)) + 1;
}

Rat superiority_gap(const Instance& inst) {
  Rat delta;
  bool first = true;
  for (int i = 0; i < inst.num_arms; ++i) {
    const RewardPmf& pmf = inst.arms[static_cast<std::size_t>(i)];
    Rat delta_i(0);
    for (int c = pmf.support_min(); c <= pmf.support_max(); ++c) {
      if (pmf.prob(c) == 0) continue;
      Rat product = pmf.prob(c);
      for (int ip = 0; ip < inst.num_arms && product > 0; ++ip) {
        if (ip == i) continue;
        product *= inst.arms[static_cast<std::size_t>(ip)].cdf(c - 1);
      }
      delta_i += product;
    }
    if (first || delta_i < delta) {
      delta = delta_i;
      first = false;
    }
  }
  return delta;
}

Family family_from_name(const std::string& name) {
  if (name == "prop5") return Family::Prop5;
  if (name == "prop6") return Family::Prop6;
  if (name == "prop7") return Family::Prop7;
  if (name == "prop9_uniform") return Family::Prop9Uniform;
  if (name == "uniform") return Family::Uniform;
  if (name == "random") return Family::Random;
  throw InputError("unknown family: " + name);
}

std::string family_name(Family family) {
  switch (family) {
    case Family::Prop5: return "prop5";
    case Family::Prop6: return "prop6";
    case Family::Prop7: return "prop7";
    case Family::Prop9Uniform: return "prop9_uniform";
    case Family::Uniform: return "uniform";
    case Family::Random: return "random";
  }
  throw InputError("unknown family");
}

namespace {

std::vector<BigInt> two_point_weights(int h, int low, int high, const Rat& p_high) {
  // Weights proportional to {low: 1-p, high: p} with exact rationals.
  std::vector<BigInt> w(static_cast<std::size_t>(h) + 1, BigInt(0));
  const BigInt den = denominator(p_high);
  w[static_cast<std::size_t>(high)] = numerator(p_high);
  w[static_cast<std::size_t>(low)] = den - numerator(p_high);
  return w;
}

std::vector<BigInt> point_weights(int h, int at) {
  std::vector<BigInt> w(static_cast<std::size_t>(h) + 1, BigInt(0));
  w[static_cast<std::size_t>(at)] = 1;
  return w;
}

std::vector<BigInt> uniform_weights(int h, int top) {
  std::vector<BigInt> w(static_cast<std::size_t>(h) + 1, BigInt(0));
  for (int c = 0; c <= top; ++c) w[static_cast<std::size_t>(c)] = 1;
  return w;
}

void require_eps_open_unit(const Rat& eps) {
  if (eps <= 0 || eps >= 1) throw InputError("eps must lie in (0,1)");
}

}  // namespace

Instance generate(Family family, const GenParams& params) {
  const int k = params.k;
  const int h = params.h;
  if (k < 2) throw InputError("need K >= 2");
  if (h < 1) throw InputError("need H >= 1");
  std::vector<std::pair<std::string, std::vector<BigInt>>> arms;
  const auto arm_name = [](int i) { return "a" + std::to_string(i + 1); };

  switch (family) {
    case Family::Prop5: {
      require_eps_open_unit(params.eps);
      if (params.eps >= Rat(1, h)) throw InputError("prop5 needs eps < 1/H");
      arms.emplace_back(arm_name(0), point_weights(h, 1));
      const Rat p_high = Rat(1, h) - params.eps;
      for (int i = 1; i < k; ++i) {
        arms.emplace_back(arm_name(i), two_point_weights(h, 0, h, p_high));
      }
      break;
    }
    case Family::Prop6: {
      require_eps_open_unit(params.eps);
      if (h < 3) throw InputError("prop6 needs H >= 3");
      if (params.eps >= Rat(1, h)) throw InputError("prop6 needs eps < 1/H");
      const Rat p1_high = Rat(1, h - 1) + params.eps;
      if (p1_high >= 1) throw InputError("prop6 needs eps < 1 - 1/(H-1)");
      arms.emplace_back(arm_name(0), two_point_weights(h, 1, h, p1_high));
      arms.emplace_back(arm_name(1), point_weights(h, 2));
      const Rat p_high = Rat(1, h) - params.eps;
      for (int i = 2; i < k; ++i) {
        arms.emplace_back(arm_name(i), two_point_weights(h, 0, h, p_high));
      }
      break;
    }
    case Family::Prop7: {
      require_eps_open_unit(params.eps);
      if (h < 2) throw InputError("prop7 needs H >= 2");
      if (params.eps >= Rat(1, h) || params.eps >= Rat(1, 2)) {
        throw InputError("prop7 needs eps < min(1/2, 1/H)");
      }
      arms.emplace_back(arm_name(0), two_point_weights(h, 0, 2, Rat(1, 2) + params.eps));
      arms.emplace_back(arm_name(1), point_weights(h, 1));
      const Rat p_high = Rat(1, h) - params.eps;
      for (int i = 2; i < k; ++i) {
        arms.emplace_back(arm_name(i), two_point_weights(h, 0, h, p_high));
      }
      break;
    }
    case Family::Prop9Uniform: {
      require_eps_open_unit(params.eps);
      // Arm 1 is uniform w.p. 1-eps and H w.p. eps; scale by (H+1)*den to
      // keep the weights integral.
      const BigInt den = denominator(params.eps);
      const BigInt num = numerator(params.eps);
      std::vector<BigInt> w1(static_cast<std::size_t>(h) + 1, den - num);
      w1[static_cast<std::size_t>(h)] += num * (h + 1);
      arms.emplace_back(arm_name(0), std::move(w1));
      for (int i = 1; i < k; ++i) {
        arms.emplace_back(arm_name(i), uniform_weights(h, h));
      }
      break;
    }
    case Family::Uniform: {
      // Nested uniform supports {0..floor(H*(K-i)/K)}, widest first.
      for (int i = 0; i < k; ++i) {
        const int top = (h * (k - i)) / k;
        arms.emplace_back(arm_name(i), uniform_weights(h, std::max(top, 0)));
      }
      break;
    }
    case Family::Random: {
      SplitMix64 rng(params.seed);
      for (int i = 0; i < k; ++i) {
        std::vector<BigInt> w(static_cast<std::size_t>(h) + 1);
        bool any = false;
        for (int c = 0; c <= h; ++c) {
          const auto v = rng.next() % 8;
          w[static_cast<std::size_t>(c)] = v;
          any = any || v > 0;
        }
        if (!any) w[static_cast<std::size_t>(rng.next() % (h + 1))] = 1;
        arms.emplace_back(arm_name(i), std::move(w));
      }
      break;
    }
  }
  return make_instance(h, std::move(arms));
}

}  // namespace fidex
