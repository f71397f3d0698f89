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
#include <functional>
#include <memory>
#include <vector>

#include "fidex/mechanisms.hpp"

namespace fidex {

/// One fixed draw of every arm's reward; immutable for the whole episode.
struct Realization {
  std::vector<int> rewards;
};

/// One inverse-CDF draw per arm, ascending arm index.
Realization sample_realization(const Instance& inst, RandomSource& rng);

enum class ArrivalKind { KnownPosition, UniformPermutation };

struct RoundRecord {
  Portfolio portfolio;
  int arm = -1;
  int reward = -1;
  MechPhase phase = MechPhase::Primary;
  int agent = 0;  // 1-based agent id (permuted under uniform arrival)
};

struct EpisodeTrace {
  MechKind kind = MechKind::Fee;
  int n = 0;
  Realization realization;
  std::vector<RoundRecord> rounds;  // populated only when collecting
  long long primary_rounds = 0;     // N1
  long long secondary_rounds = 0;   // N2
  Rat welfare;                      // exact mean of the received rewards
};

struct EpisodeOptions {
  bool collect_rounds = false;
  /// Disables the absorption shortcut (all n rounds are stepped).
  bool full = false;
  ArrivalKind arrival = ArrivalKind::KnownPosition;
  /// Called before sampling each round with the mechanism's pre-round
  /// history and the recommended portfolio. Implies full.
  std::function<void(int round, const History& hist, const Portfolio& rec)> hook;
};

/// Runs one seeded episode. Episode randomness comes from a single stream
/// derived from (master_seed, episode_index): the realization draws first
/// (ascending arm), then each round's mechanism coins followed by the
/// portfolio draw. Once the mechanism is absorbed the remaining rounds are
/// accounted for analytically unless `full` is requested.
EpisodeTrace run_episode(std::shared_ptr<const Instance> inst, const MechConfig& config,
                         std::shared_ptr<const Policy> policy, int n,
                         std::uint64_t master_seed, std::uint64_t episode_index,
                         const EpisodeOptions& options = {});

struct WelfareEstimate {
  double mean = 0;
  double std_error = 0;
  long long runs = 0;
  std::uint64_t seed = 0;
  int n = 0;
  double mean_n1 = 0;
  double mean_n2 = 0;
};

/// Monte Carlo social-welfare estimate over independent seeded episodes.
/// Per-episode welfare is exact; only the cross-episode accumulation is in
/// floating point (Welford, combined across fixed contiguous chunks so the
/// result is deterministic for a given thread count).
WelfareEstimate estimate_welfare(std::shared_ptr<const Instance> inst,
                                 const MechConfig& config,
                                 std::shared_ptr<const Policy> policy, int n,
                                 long long runs, std::uint64_t seed, int threads = 1);

/// Empirical means of the primary/secondary exploration lengths. The counts
/// are only meaningful for FEE traces; anything else is an error.
std::pair<double, double> phase_stats(const std::vector<EpisodeTrace>& traces);

/// n * (opt_eair - estimated mean welfare).
double welfare_gap(const Rat& opt_eair, const WelfareEstimate& estimate);

/// Fixed-precision decimal rendering shared by every CSV writer.
std::string format_double(double value);

struct ResultRow {
  std::string mech;
  WelfareEstimate estimate;
  Rat opt;
  Rat opt_eair;
  double gap = 0;
};

/// Simulation results table: one line per row under the header
/// mech,n,runs,seed,mean,std_error,mean_n1,mean_n2,opt,opt_eair,gap
std::string results_csv(const std::vector<ResultRow>& rows);

}  // namespace fidex
