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
#include "fidex/gmdp.hpp"

#include <algorithm>

namespace fidex {

Rat Portfolio::prob(int arm) const {
  for (const auto& [a, p] : entries) {
    if (a == arm) return p;
  }
  return Rat(0);
}

Rat portfolio_prior_expectation(const Portfolio& p, const Instance& inst) {
  Rat e(0);
  for (const auto& [arm, prob] : p.entries) e += prob * inst.mean(arm);
  return e;
}

GmdpState initial_state(const Instance& inst) {
  return GmdpState{static_cast<ArmSet>((1u << inst.num_arms) - 1u), -1, -1};
}

GmdpState state_after(const GmdpState& s, int arm, int reward) {
  GmdpState next = s;
  if (s.initial()) {
    if (arm != 0) throw InputError("first observation must come from the default arm");
    next.alpha = reward;
    next.beta = reward;
  } else {
    next.beta = std::max(next.beta, reward);
  }
  next.unobserved &= ~(1u << arm);
  return next;
}

Portfolio pair_portfolio(int i, int r, int alpha, const Instance& inst) {
  if (i == r) return Portfolio::point(i);
  const Rat di = abs(Rat(alpha) - inst.mean(i));
  const Rat dr = abs(Rat(alpha) - inst.mean(r));
  const Rat total = di + dr;
  if (total == 0) return Portfolio::point(i);  // both means sit exactly at alpha
  const Rat pi = dr / total;
  Portfolio out;
  if (pi > 0) out.entries.emplace_back(i, pi);
  if (pi < 1) out.entries.emplace_back(r, 1 - pi);
  std::sort(out.entries.begin(), out.entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::vector<ActionPair> feasible_actions(const GmdpState& s, const Instance& inst) {
  if (s.initial()) throw InputError("feasible_actions: initial state takes arm 1 only");
  std::vector<ActionPair> out;
  if (s.alpha < s.beta) return out;
  for (int i = 0; i < inst.num_arms; ++i) {
    if (!has_arm(s.unobserved, i)) continue;
    for (int r = 0; r < inst.num_arms; ++r) {
      if (!has_arm(s.unobserved, r)) continue;
      // The two-point lottery meets the constraint exactly when it straddles
      // alpha and exceeds it when both means do; so feasibility reduces to
      // max(mu_i, mu_r) >= alpha.
      if (inst.mean(i) >= s.alpha || inst.mean(r) >= s.alpha) {
        out.push_back(ActionPair{i, r});
      }
    }
  }
  return out;
}

bool is_terminal(const GmdpState& s, const Instance& inst) {
  if (s.initial()) return false;
  if (s.alpha < s.beta) return true;
  for (int i = 0; i < inst.num_arms; ++i) {
    if (has_arm(s.unobserved, i) && inst.mean(i) >= s.alpha) return false;
  }
  return true;
}

std::vector<std::pair<GmdpState, Rat>> transitions(const GmdpState& s,
                                                   const Portfolio& p,
                                                   const Instance& inst) {
  std::vector<std::pair<GmdpState, Rat>> out;
  for (const auto& [arm, arm_prob] : p.entries) {
    const RewardPmf& pmf = inst.arms[static_cast<std::size_t>(arm)];
    if (!s.initial()) {
      // Outcomes c <= alpha collapse into one canonical successor.
      const Rat below = pmf.cdf(s.alpha);
      if (below > 0) {
        out.emplace_back(state_after(s, arm, s.alpha), arm_prob * below);
      }
      for (int c = std::max(s.alpha + 1, pmf.support_min()); c <= pmf.support_max(); ++c) {
        if (pmf.prob(c) == 0) continue;
        out.emplace_back(state_after(s, arm, c), arm_prob * pmf.prob(c));
      }
    } else {
      for (int c = pmf.support_min(); c <= pmf.support_max(); ++c) {
        if (pmf.prob(c) == 0) continue;
        out.emplace_back(state_after(s, arm, c), arm_prob * pmf.prob(c));
      }
    }
  }
  return out;
}

Rat terminal_reward(const GmdpState& s, const Instance& inst) {
  if (s.initial() || !is_terminal(s, inst)) {
    throw InputError("terminal_reward called on a non-terminal state");
  }
  if (s.alpha == s.beta) return Rat(s.alpha);
  if (s.unobserved == 0) return Rat(s.beta);
  // E[max(beta, max of unobserved arms)] via products of CDFs, floored at beta.
  const auto joint_cdf = [&](int c) {
    Rat g(1);
    for (int i = 0; i < inst.num_arms && g > 0; ++i) {
      if (has_arm(s.unobserved, i)) g *= inst.arms[static_cast<std::size_t>(i)].cdf(c);
    }
    return g;
  };
  Rat prev = joint_cdf(s.beta);
  Rat e = Rat(s.beta) * prev;
  for (int c = s.beta + 1; c <= inst.max_reward; ++c) {
    const Rat cur = joint_cdf(c);
    e += Rat(c) * (cur - prev);
    prev = cur;
  }
  return e;
}

namespace {

struct Planner {
  const Instance& inst;
  std::unordered_map<GmdpState, Rat, GmdpStateHash> terminal_memo;

  Rat terminal_value(const GmdpState& s) {
    auto it = terminal_memo.find(s);
    if (it != terminal_memo.end()) return it->second;
    Rat v = terminal_reward(s, inst);
    terminal_memo.emplace(s, v);
    return v;
  }
};

}  // namespace

Policy plan(std::shared_ptr<const Instance> inst, std::size_t budget_states) {
  const Instance& in = *inst;
  const int k = in.num_arms;
  if (k > 24) throw BudgetError("too many arms for the bit-set state encoding");

  std::vector<int> alphas;
  const RewardPmf& first = in.arms[0];
  for (int c = first.support_min(); c <= first.support_max(); ++c) {
    if (first.prob(c) > 0) alphas.push_back(c);
  }
  const std::size_t total =
      (std::size_t(1) << (k - 1)) * alphas.size() + 1;
  if (total > budget_states) {
    throw BudgetError("state space exceeds budget: " + std::to_string(total));
  }

  Policy policy;
  policy.instance = inst;
  policy.state_count = total;
  Planner planner{in, {}};

  // Non-default arms enumerated by subset popcount so successors are ready.
  std::vector<ArmSet> subsets;
  subsets.reserve(std::size_t(1) << (k - 1));
  for (ArmSet bits = 0; bits < (1u << (k - 1)); ++bits) {
    subsets.push_back(static_cast<ArmSet>(bits) << 1);  // arm 0 never unobserved here
  }
  std::sort(subsets.begin(), subsets.end(), [](ArmSet a, ArmSet b) {
    const int ca = arm_count(a), cb = arm_count(b);
    return ca != cb ? ca < cb : a < b;
  });

  // States with alpha == beta missing from the table are terminal with
  // reward alpha; everything else was computed at a smaller popcount.
  const auto level_value = [&](const GmdpState& st) -> Rat {
    auto it = policy.table.find(st);
    if (it != policy.table.end()) return it->second.value;
    return Rat(st.alpha);
  };

  // Value of the canonical successor (U \ {x}, alpha, max(alpha, c)) summed
  // over the reward distribution of arm x.
  const auto explore_backup = [&](ArmSet u, int alpha, int x) {
    const GmdpState below{u & ~(1u << x), alpha, alpha};
    const RewardPmf& pmf = in.arms[static_cast<std::size_t>(x)];
    Rat v(0);
    const Rat mass_below = pmf.cdf(alpha);
    if (mass_below > 0) v += mass_below * level_value(below);
    for (int c = std::max(alpha + 1, pmf.support_min()); c <= pmf.support_max(); ++c) {
      if (pmf.prob(c) == 0) continue;
      v += pmf.prob(c) * planner.terminal_value(GmdpState{u & ~(1u << x), alpha, c});
    }
    return v;
  };

  for (const int alpha : alphas) {
    for (const ArmSet u : subsets) {
      const GmdpState s{u, alpha, alpha};
      if (is_terminal(s, in)) continue;
      // Backups per explored arm are shared across action pairs.
      std::unordered_map<int, Rat> arm_backup;
      for (int x = 0; x < k; ++x) {
        if (has_arm(u, x)) arm_backup.emplace(x, explore_backup(u, alpha, x));
      }
      PolicyEntry best;
      bool have = false;
      for (const ActionPair& a : feasible_actions(s, in)) {
        const Portfolio p = pair_portfolio(a.i, a.r, alpha, in);
        Rat v(0);
        for (const auto& [arm, prob] : p.entries) v += prob * arm_backup.at(arm);
        if (!have || v > best.value) {
          best = PolicyEntry{a, v};
          have = true;
        }
      }
      policy.table.emplace(s, std::move(best));
    }
  }

  // Root: the mandatory deterministic pull of the default arm.
  const GmdpState s0 = initial_state(in);
  Rat root(0);
  for (const int c : alphas) {
    const GmdpState s1{s0.unobserved & ~1u, c, c};
    root += first.prob(c) * level_value(s1);
  }
  policy.table.emplace(s0, PolicyEntry{ActionPair{0, 0}, root});
  policy.root_value = root;
  return policy;
}

const PolicyEntry& Policy::at(const GmdpState& s) const {
  auto it = table.find(s);
  if (it == table.end()) throw InputError("state not in policy table");
  return it->second;
}

Rat policy_value(const Policy& policy, const GmdpState& s) {
  auto it = policy.table.find(s);
  if (it != policy.table.end()) return it->second.value;
  const Instance& in = *policy.instance;
  // Terminal states are not tabulated; anything else is unreachable. The
  // default reward alpha must come from arm 0's support.
  const bool plausible = !s.initial() && !has_arm(s.unobserved, 0) &&
                         s.alpha >= 0 && s.beta >= s.alpha && s.beta <= in.max_reward &&
                         s.alpha <= in.max_reward && in.arms[0].prob(s.alpha) > 0;
  if (plausible && is_terminal(s, in)) return terminal_reward(s, in);
  throw InputError("state unknown to policy");
}

Rat action_backup(const Policy& policy, const GmdpState& s, const ActionPair& a) {
  const Instance& in = *policy.instance;
  const Portfolio p = pair_portfolio(a.i, a.r, s.alpha, in);
  Rat v(0);
  for (const auto& [state, prob] : transitions(s, p, in)) {
    v += prob * policy_value(policy, state);
  }
  return v;
}

}  // namespace fidex
