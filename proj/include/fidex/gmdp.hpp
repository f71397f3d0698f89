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
#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fidex/instance.hpp"
#include "fidex/rational.hpp"

namespace fidex {

/// Set of arms encoded as a bit mask (bit i = arm i still unobserved).
using ArmSet = std::uint32_t;

inline int lowest_arm(ArmSet set) { return __builtin_ctz(set); }
inline int arm_count(ArmSet set) { return __builtin_popcount(set); }
inline bool has_arm(ArmSet set, int arm) { return (set >> arm) & 1u; }

/// Reduced exploration state: the unobserved set plus the default arm's
/// observed reward (alpha) and the best observed reward (beta). The initial
/// state carries alpha = beta = -1 (nothing observed yet).
struct GmdpState {
  ArmSet unobserved = 0;
  int alpha = -1;
  int beta = -1;

  bool initial() const { return alpha < 0; }
  friend auto operator<=>(const GmdpState&, const GmdpState&) = default;
};

struct GmdpStateHash {
  std::size_t operator()(const GmdpState& s) const {
    std::uint64_t x = s.unobserved;
    x = x * 0x100000001B3ULL ^ static_cast<std::uint64_t>(s.alpha + 1);
    x = x * 0x100000001B3ULL ^ static_cast<std::uint64_t>(s.beta + 1);
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDULL;
    x ^= x >> 33;
    return static_cast<std::size_t>(x);
  }
};

/// Recommendation lottery: positive probabilities on ascending arm indices,
/// summing to exactly 1.
struct Portfolio {
  std::vector<std::pair<int, Rat>> entries;

  static Portfolio point(int arm) { return Portfolio{{{arm, Rat(1)}}}; }
  bool is_point() const { return entries.size() == 1; }
  int point_arm() const { return entries.front().first; }
  Rat prob(int arm) const;
};

/// Expected prior reward sum p(a) * mu_a.
Rat portfolio_prior_expectation(const Portfolio& p, const Instance& inst);

/// Ordered pair of arms defining the two-point lottery p_{i,r}; i == r is the
/// deterministic recommendation of arm i.
struct ActionPair {
  int i = -1;
  int r = -1;
  friend bool operator==(const ActionPair&, const ActionPair&) = default;
};

GmdpState initial_state(const Instance& inst);

/// Applies one observation: removes the arm from the unobserved set and
/// updates alpha/beta (at the initial state the observed arm must be arm 0).
GmdpState state_after(const GmdpState& s, int arm, int reward);

/// The two-point lottery mixing arms i and r with weights inversely
/// proportional to their mean-distance from alpha. Both means equal to alpha
/// degenerates to a point mass on arm i.
Portfolio pair_portfolio(int i, int r, int alpha, const Instance& inst);

/// All pairs (i, r) over the unobserved set whose lottery has prior
/// expectation >= alpha. Requires a non-initial state with alpha == beta.
std::vector<ActionPair> feasible_actions(const GmdpState& s, const Instance& inst);

bool is_terminal(const GmdpState& s, const Instance& inst);

/// Successor distribution under a lottery, merged by canonical state;
/// probabilities sum to exactly 1.
std::vector<std::pair<GmdpState, Rat>> transitions(const GmdpState& s,
                                                   const Portfolio& p,
                                                   const Instance& inst);

/// alpha == beta: alpha. alpha < beta: E[max(beta, max of unobserved arms)].
Rat terminal_reward(const GmdpState& s, const Instance& inst);

struct PolicyEntry {
  ActionPair action;
  Rat value;
};

/// Optimal exploration policy: an action and exact value for every
/// non-terminal canonical state, plus the root value.
struct Policy {
  std::shared_ptr<const Instance> instance;
  std::unordered_map<GmdpState, PolicyEntry, GmdpStateHash> table;
  Rat root_value;
  std::size_t state_count = 0;

  bool contains(const GmdpState& s) const { return table.count(s) > 0; }
  const PolicyEntry& at(const GmdpState& s) const;
};

/// Backward dynamic programming over canonical states ordered by the size of
/// the unobserved set. Materializes every state (U, alpha) with alpha in the
/// support of arm 0, so the policy also covers states reached off the optimal
/// path (e.g. after greedy detours). Throws BudgetError past `budget_states`.
Policy plan(std::shared_ptr<const Instance> inst,
            std::size_t budget_states = std::size_t(1) << 20);

/// Exact W: table lookup for known states, terminal reward for terminals.
Rat policy_value(const Policy& policy, const GmdpState& s);

/// One-step backup of an action pair against the policy's value table.
Rat action_backup(const Policy& policy, const GmdpState& s, const ActionPair& a);

}  // namespace fidex
