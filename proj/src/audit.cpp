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
#include "fidex/audit.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>

namespace fidex {

Rat posterior_mean(const Instance& inst, const History& hist, int arm) {
  if (hist.has(arm)) return Rat(hist.reward(arm));
  return inst.mean(arm);
}

CheckResult check_eair(const Instance& inst, const History& hist, const Portfolio& p) {
  Rat lhs(0);
  for (const auto& [arm, prob] : p.entries) {
    lhs += prob * posterior_mean(inst, hist, arm);
  }
  const Rat margin = lhs - posterior_mean(inst, hist, 0);
  return CheckResult{margin >= 0, margin};
}

CheckResult check_epir(const Instance& inst, const History& hist, const Portfolio& p) {
  const Rat base = posterior_mean(inst, hist, 0);
  Rat margin;
  bool first = true;
  for (const auto& [arm, prob] : p.entries) {
    (void)prob;
    const Rat diff = posterior_mean(inst, hist, arm) - base;
    if (first || diff < margin) {
      margin = diff;
      first = false;
    }
  }
  if (first) throw InputError("empty portfolio");
  return CheckResult{margin >= 0, margin};
}

void AuditReport::add(long long round, std::string constraint, const Rat& margin) {
  const bool pass = margin >= 0;
  rows.push_back(AuditRow{round, std::move(constraint), margin, pass});
  if (!any_checked || margin < worst_margin) worst_margin = margin;
  any_checked = true;
  all_pass = all_pass && pass;
}

namespace {

// Replays a recorded choice prefix against the mechanism's randomness; the
// first unrecorded choice point aborts the run and reports its distribution
// so the enumerator can branch on it.
struct BranchSignal {
  std::vector<Rat> probs;
};

class ReplaySource final : public RandomSource {
 public:
  explicit ReplaySource(const std::vector<std::size_t>& prefix) : prefix_(prefix) {}

  std::size_t draw(const std::vector<Rat>& probs) override {
    std::size_t positive = 0;
    std::size_t last_positive = 0;
    for (std::size_t idx = 0; idx < probs.size(); ++idx) {
      if (probs[idx] > 0) {
        ++positive;
        last_positive = idx;
      }
    }
    if (positive == 0) throw InputError("draw over an all-zero distribution");
    if (positive == 1) return last_positive;
    if (pos_ < prefix_.size()) {
      const std::size_t idx = prefix_[pos_++];
      path_prob_ *= probs[idx];
      return idx;
    }
    throw BranchSignal{probs};
  }

  const Rat& path_prob() const { return path_prob_; }

 private:
  const std::vector<std::size_t>& prefix_;
  std::size_t pos_ = 0;
  Rat path_prob_{1};
};

struct RecStats {
  Rat prob{0};
  std::vector<Rat> reward_mass;  // sum of path_prob * realization[j] per arm
};

}  // namespace

AuditReport check_ic_exact(std::shared_ptr<const Instance> inst,
                           std::shared_ptr<const Policy> policy,
                           const IcCheckConfig& config) {
  const Instance& in = *inst;
  const int k = in.num_arms;
  const int n = config.horizon;
  if (n < 1) throw InputError("horizon must be at least 1");

  // stats[l][r]: probability of "round l recommends arm r" and, for each j,
  // the partial expectation of X_j on that event.
  std::vector<std::vector<RecStats>> stats(
      static_cast<std::size_t>(n),
      std::vector<RecStats>(static_cast<std::size_t>(k),
                            RecStats{Rat(0), std::vector<Rat>(static_cast<std::size_t>(k), Rat(0))}));

  std::vector<int> realization(static_cast<std::size_t>(k));
  std::size_t runs = 0;

  const auto run_realization = [&](const Rat& prior) {
    std::vector<std::vector<std::size_t>> pending;
    pending.emplace_back();
    std::vector<int> recs(static_cast<std::size_t>(n));
    while (!pending.empty()) {
      const std::vector<std::size_t> prefix = std::move(pending.back());
      pending.pop_back();
      if (++runs > config.max_paths) {
        throw BudgetError("IC enumeration exceeded its path budget");
      }
      ReplaySource source(prefix);
      auto mech = make_mechanism(config.mech, inst, policy, n);
      bool branched = false;
      try {
        for (int l = 0; l < n; ++l) {
          const Portfolio rec = mech->step(source);
          std::vector<Rat> probs;
          probs.reserve(rec.entries.size());
          for (const auto& [arm, p] : rec.entries) probs.push_back(p);
          const std::size_t idx = source.draw(probs);
          const int arm = rec.entries[idx].first;
          recs[static_cast<std::size_t>(l)] = arm;
          mech->observe(arm, realization[static_cast<std::size_t>(arm)]);
        }
      } catch (const BranchSignal& branch) {
        for (std::size_t child = 0; child < branch.probs.size(); ++child) {
          if (branch.probs[child] <= 0) continue;
          std::vector<std::size_t> extended = prefix;
          extended.push_back(child);
          pending.push_back(std::move(extended));
        }
        branched = true;
      }
      if (branched) continue;
      const Rat weight = prior * source.path_prob();
      for (int l = 0; l < n; ++l) {
        RecStats& cell = stats[static_cast<std::size_t>(l)]
                              [static_cast<std::size_t>(recs[static_cast<std::size_t>(l)])];
        cell.prob += weight;
        for (int j = 0; j < k; ++j) {
          cell.reward_mass[static_cast<std::size_t>(j)] +=
              weight * realization[static_cast<std::size_t>(j)];
        }
      }
    }
  };

  // Odometer over the product of arm supports.
  std::vector<std::vector<int>> supports(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const RewardPmf& pmf = in.arms[static_cast<std::size_t>(i)];
    for (int c = pmf.support_min(); c <= pmf.support_max(); ++c) {
      if (pmf.prob(c) > 0) supports[static_cast<std::size_t>(i)].push_back(c);
    }
  }
  std::vector<std::size_t> cursor(static_cast<std::size_t>(k), 0);
  while (true) {
    Rat prior(1);
    for (int i = 0; i < k; ++i) {
      const int c = supports[static_cast<std::size_t>(i)][cursor[static_cast<std::size_t>(i)]];
      realization[static_cast<std::size_t>(i)] = c;
      prior *= in.arms[static_cast<std::size_t>(i)].prob(c);
    }
    run_realization(prior);
    int pos = k - 1;
    while (pos >= 0) {
      auto& slot = cursor[static_cast<std::size_t>(pos)];
      if (++slot < supports[static_cast<std::size_t>(pos)].size()) break;
      slot = 0;
      --pos;
    }
    if (pos < 0) break;
  }

  AuditReport report;
  for (int l = 0; l < n; ++l) {
    for (int r = 0; r < k; ++r) {
      const RecStats& cell = stats[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
      if (cell.prob == 0) continue;
      for (int j = 0; j < k; ++j) {
        if (j == r) continue;
        const Rat margin = (cell.reward_mass[static_cast<std::size_t>(r)] -
                            cell.reward_mass[static_cast<std::size_t>(j)]) /
                           cell.prob;
        report.add(l + 1,
                   "ic l=" + std::to_string(l + 1) + " rec=a" + std::to_string(r + 1) +
                       " alt=a" + std::to_string(j + 1),
                   margin);
      }
    }
  }
  return report;
}

namespace {

// Value recursion for a fixed stationary action assignment; the oracle side
// of the dual-route optimality check, deliberately independent of plan().
Rat assignment_value(const Instance& inst,
                     const std::map<GmdpState, Portfolio>& assignment,
                     const GmdpState& s) {
  if (!s.initial() && is_terminal(s, inst)) return terminal_reward(s, inst);
  const auto it = assignment.find(s);
  if (it == assignment.end()) throw InputError("assignment misses a reachable state");
  Rat v(0);
  for (const auto& [next, prob] : transitions(s, it->second, inst)) {
    v += prob * assignment_value(inst, assignment, next);
  }
  return v;
}

std::vector<int> support_values(const RewardPmf& pmf) {
  std::vector<int> out;
  for (int c = pmf.support_min(); c <= pmf.support_max(); ++c) {
    if (pmf.prob(c) > 0) out.push_back(c);
  }
  return out;
}

Rat brute_force_simple(const Instance& inst) {
  if (inst.num_arms > 3 || inst.max_reward > 3) {
    throw BudgetError("simple-policy enumeration is limited to K <= 3, H <= 3");
  }
  const GmdpState s0 = initial_state(inst);

  // Collect every canonical state that any stationary policy could visit.
  std::vector<GmdpState> choice_states;
  std::vector<std::vector<ActionPair>> choices;
  for (const int alpha : support_values(inst.arms[0])) {
    for (ArmSet bits = 1; bits < (1u << (inst.num_arms - 1)); ++bits) {
      const GmdpState s{static_cast<ArmSet>(bits << 1), alpha, alpha};
      if (is_terminal(s, inst)) continue;
      choice_states.push_back(s);
      choices.push_back(feasible_actions(s, inst));
    }
  }

  std::vector<std::size_t> pick(choice_states.size(), 0);
  Rat best(0);
  bool have = false;
  while (true) {
    std::map<GmdpState, Portfolio> assignment;
    assignment.emplace(s0, Portfolio::point(0));
    for (std::size_t idx = 0; idx < choice_states.size(); ++idx) {
      const ActionPair a = choices[idx][pick[idx]];
      assignment.emplace(choice_states[idx],
                         pair_portfolio(a.i, a.r, choice_states[idx].alpha, inst));
    }
    const Rat value = assignment_value(inst, assignment, s0);
    if (!have || value > best) {
      best = value;
      have = true;
    }
    std::size_t pos = 0;
    while (pos < pick.size()) {
      if (++pick[pos] < choices[pos].size()) break;
      pick[pos] = 0;
      ++pos;
    }
    if (pos == pick.size()) break;
  }
  return best;
}

Rat brute_force_grid(const Instance& inst, int step) {
  if (inst.num_arms > 3) {
    throw BudgetError("grid enumeration is limited to K <= 3");
  }
  if (step < 1) throw InputError("grid step must be positive");

  // Bottom-up over canonical states; at each state take the best feasible
  // grid lottery. The state graph is a DAG, so per-state maximization equals
  // exhaustive enumeration over grid assignments.
  std::map<GmdpState, Rat> value;
  const auto value_of = [&](const GmdpState& s) -> Rat {
    const auto it = value.find(s);
    if (it != value.end()) return it->second;
    return terminal_reward(s, inst);
  };

  const auto grid_portfolios = [&](ArmSet u, int alpha) {
    std::vector<Portfolio> out;
    std::vector<int> arms;
    for (int i = 0; i < inst.num_arms; ++i) {
      if (has_arm(u, i)) arms.push_back(i);
    }
    if (arms.size() == 1) {
      out.push_back(Portfolio::point(arms[0]));
    } else if (arms.size() == 2) {
      for (int t = 0; t <= step; ++t) {
        Portfolio p;
        if (t > 0) p.entries.emplace_back(arms[0], Rat(t, step));
        if (t < step) p.entries.emplace_back(arms[1], Rat(step - t, step));
        out.push_back(std::move(p));
      }
    } else {
      throw BudgetError("grid enumeration is limited to |U| <= 2");
    }
    std::vector<Portfolio> feasible;
    for (Portfolio& p : out) {
      if (portfolio_prior_expectation(p, inst) >= alpha) feasible.push_back(std::move(p));
    }
    return feasible;
  };

  std::vector<ArmSet> subsets;
  for (ArmSet bits = 1; bits < (1u << (inst.num_arms - 1)); ++bits) {
    subsets.push_back(static_cast<ArmSet>(bits << 1));
  }
  std::sort(subsets.begin(), subsets.end(), [](ArmSet a, ArmSet b) {
    return arm_count(a) != arm_count(b) ? arm_count(a) < arm_count(b) : a < b;
  });

  for (const int alpha : support_values(inst.arms[0])) {
    for (const ArmSet u : subsets) {
      const GmdpState s{u, alpha, alpha};
      if (is_terminal(s, inst)) continue;
      Rat best(0);
      bool have = false;
      for (const Portfolio& p : grid_portfolios(u, alpha)) {
        Rat v(0);
        for (const auto& [next, prob] : transitions(s, p, inst)) {
          v += prob * value_of(next);
        }
        if (!have || v > best) {
          best = v;
          have = true;
        }
      }
      // Point masses always sit on the mesh, so a non-terminal state has at
      // least one feasible grid lottery.
      if (!have) throw InputError("non-terminal state without a grid action");
      value.emplace(s, best);
    }
  }

  Rat root(0);
  const RewardPmf& first = inst.arms[0];
  const ArmSet rest = static_cast<ArmSet>(((1u << inst.num_arms) - 1u) & ~1u);
  for (const int c : support_values(first)) {
    root += first.prob(c) * value_of(GmdpState{rest, c, c});
  }
  return root;
}

}  // namespace

Rat brute_force_opt_eair(const Instance& inst, BruteForceMode mode, int grid_step) {
  switch (mode) {
    case BruteForceMode::SimplePolicies: return brute_force_simple(inst);
    case BruteForceMode::Grid: return brute_force_grid(inst, grid_step);
  }
  throw InputError("unknown brute force mode");
}

namespace {

Rat expected_max_over(const Instance& inst, const std::vector<int>& arms, int floor_value) {
  // E[max(floor, max of arms)] via products of CDFs.
  const auto joint_cdf = [&](int c) {
    Rat g(1);
    for (const int i : arms) {
      g *= inst.arms[static_cast<std::size_t>(i)].cdf(c);
      if (g == 0) break;
    }
    return g;
  };
  Rat prev = joint_cdf(floor_value);
  Rat e = Rat(floor_value) * prev;
  for (int c = floor_value + 1; c <= inst.max_reward; ++c) {
    const Rat cur = joint_cdf(c);
    e += Rat(c) * (cur - prev);
    prev = cur;
  }
  return e;
}

Rat greedy_delegate_value(const Instance& inst) {
  // The delegate explores arms in canonical order, moving on only while the
  // best observed reward is strictly below the next prior mean (ties keep
  // the incumbent). Tracks the exact distribution of the running maximum.
  std::map<int, Rat> running;  // best observed reward -> probability
  const RewardPmf& first = inst.arms[0];
  for (int c = first.support_min(); c <= first.support_max(); ++c) {
    if (first.prob(c) > 0) running[c] = first.prob(c);
  }
  Rat total(0);
  for (int j = 1; j < inst.num_arms; ++j) {
    const RewardPmf& pmf = inst.arms[static_cast<std::size_t>(j)];
    std::map<int, Rat> next;
    for (const auto& [m, p] : running) {
      if (Rat(m) < inst.mean(j)) {
        for (int c = pmf.support_min(); c <= pmf.support_max(); ++c) {
          if (pmf.prob(c) == 0) continue;
          next[std::max(m, c)] += p * pmf.prob(c);
        }
      } else {
        total += p * m;  // absorbed: the incumbent is exploited forever
      }
    }
    running = std::move(next);
  }
  for (const auto& [m, p] : running) total += p * m;
  return total;
}

}  // namespace

WelfareBenchmarks welfare_benchmarks(std::shared_ptr<const Instance> inst,
                                     const Policy* policy) {
  const Instance& in = *inst;
  WelfareBenchmarks out;

  std::vector<int> all_arms(static_cast<std::size_t>(in.num_arms));
  for (int i = 0; i < in.num_arms; ++i) all_arms[static_cast<std::size_t>(i)] = i;
  out.opt = expected_max_over(in, all_arms, 0);

  if (policy != nullptr) {
    out.opt_eair = policy->root_value;
  } else {
    out.opt_eair = plan(inst).root_value;
  }

  // M_EPIR: after observing R1 = c it explores exactly the arms whose prior
  // mean weakly beats c and keeps the best reward seen.
  Rat epir(0);
  const RewardPmf& first = in.arms[0];
  for (int c = first.support_min(); c <= first.support_max(); ++c) {
    if (first.prob(c) == 0) continue;
    std::vector<int> explored;
    for (int i = 1; i < in.num_arms; ++i) {
      if (in.mean(i) >= c) explored.push_back(i);
    }
    epir += first.prob(c) * expected_max_over(in, explored, c);
  }
  out.opt_epir = epir;

  out.opt_del = greedy_delegate_value(in);
  return out;
}

long long ic_threshold_uniform(const Instance& inst) {
  const Rat delta = superiority_gap(inst);
  if (delta == 0) throw InputError("delta = 0: no arm is ever strictly best");
  const int h = inst.max_reward;
  const Rat base = Rat(24) * h * h / delta;
  const Rat log_arg = Rat(4) * h / delta;

  for (int terms = 16; terms <= 4096; terms *= 2) {
    const RatInterval ln = ln_enclosure(log_arg, terms);
    const Rat lo_term = Rat(h) * ln.lo;
    const Rat hi_term = Rat(h) * ln.hi;
    const Rat k(inst.num_arms);
    if (lo_term < k && k < hi_term) continue;  // branch of max() still unresolved
    const Rat bound_lo = base * std::max(k, lo_term);
    const Rat bound_hi = base * std::max(k, hi_term);
    const BigInt n_lo = ceil_rat(bound_lo);
    const BigInt n_hi = ceil_rat(bound_hi);
    if (n_lo == n_hi) {
      if (n_hi > std::numeric_limits<long long>::max()) {
        throw InputError("threshold does not fit in 64 bits");
      }
      return static_cast<long long>(n_hi);
    }
  }
  throw InputError("log enclosure failed to converge");
}

}  // namespace fidex
