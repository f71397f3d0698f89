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

#include <memory>
#include <string>
#include <vector>

#include "fidex/gmdp.hpp"
#include "fidex/instance.hpp"
#include "fidex/mechanisms.hpp"

namespace fidex {

/// E(X_arm | history): the observed reward if the arm was explored, the
/// prior mean otherwise (rewards are fixed once realized and arms are
/// mutually independent).
Rat posterior_mean(const Instance& inst, const History& hist, int arm);

struct CheckResult {
  bool pass = false;
  Rat margin;
};

/// Ex-ante individual rationality: the portfolio's posterior expectation
/// must weakly beat the default arm's posterior value. margin = lhs - rhs.
CheckResult check_eair(const Instance& inst, const History& hist, const Portfolio& p);

/// Ex-post individual rationality: every arm in the support must
/// individually beat the default arm's posterior value. margin = worst arm.
CheckResult check_epir(const Instance& inst, const History& hist, const Portfolio& p);

struct AuditRow {
  long long round = 0;
  std::string constraint;
  Rat margin;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditRow> rows;
  Rat worst_margin;
  bool any_checked = false;
  bool all_pass = true;

  void add(long long round, std::string constraint, const Rat& margin);
};

struct IcCheckConfig {
  MechConfig mech;
  int horizon = 1;
  std::size_t max_paths = 5'000'000;
};

/// Exact incentive-compatibility check under known-position arrival: for
/// every round, every arm recommended with positive probability and every
/// alternative arm, computes E(X_r - X_j | round's recommendation = a_r) by
/// summing over all reward realizations and all internal coin outcomes of
/// the mechanism. Throws BudgetError past max_paths mechanism runs.
AuditReport check_ic_exact(std::shared_ptr<const Instance> inst,
                           std::shared_ptr<const Policy> policy,
                           const IcCheckConfig& config);

enum class BruteForceMode { SimplePolicies, Grid };

/// Independent optimality oracle. SimplePolicies exhaustively enumerates
/// every assignment of a feasible action pair to every canonical state
/// (K <= 3, H <= 3); Grid does the same over 1/step-mesh lotteries
/// (unobserved sets of size <= 2). Both evaluate policies by the plain value
/// recursion, independent of the planner.
Rat brute_force_opt_eair(const Instance& inst, BruteForceMode mode, int grid_step = 64);

struct WelfareBenchmarks {
  Rat opt;       // E[max over all arms]
  Rat opt_eair;  // optimal exploration value at the initial state
  Rat opt_epir;  // value of exploring every arm with mean >= R1
  Rat opt_del;   // asymptotic value of the greedy delegate
};

/// All four asymptotic benchmarks, computed exactly. Passing a precomputed
/// policy avoids re-planning.
WelfareBenchmarks welfare_benchmarks(std::shared_ptr<const Instance> inst,
                                     const Policy* policy = nullptr);

/// Smallest n such that n >= (24 H^2 / delta) * max(K, H ln(4H/delta)),
/// with the log evaluated as a certified rational enclosure. Throws
/// InputError when delta = 0.
long long ic_threshold_uniform(const Instance& inst);

}  // namespace fidex
