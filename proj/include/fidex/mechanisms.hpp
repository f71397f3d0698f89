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
#include <optional>
#include <string>
#include <vector>

#include "fidex/gmdp.hpp"
#include "fidex/instance.hpp"
#include "fidex/rng.hpp"

namespace fidex {

/// Source of the per-round randomness. Simulation draws from a seeded
/// stream; the exact IC checker substitutes a branching source that
/// enumerates every outcome with its exact probability.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  /// Picks an index distributed per `probs` (exact, summing to 1). A uniform
  /// variate is consumed only when at least two entries are positive.
  virtual std::size_t draw(const std::vector<Rat>& probs) = 0;

  std::size_t draw_uniform(std::size_t n);
};

/// Seeded stream source; inverse-CDF over the index order using an exact
/// dyadic comparison, so traces are bit-reproducible.
class StreamSource : public RandomSource {
 public:
  explicit StreamSource(std::uint64_t seed) : rng_(seed) {}
  std::size_t draw(const std::vector<Rat>& probs) override;

 private:
  SplitMix64 rng_;
};

/// Observation log. Re-observing an arm must repeat the same reward (rewards
/// are fixed once realized) and adds no information.
class History {
 public:
  void reset(int num_arms);
  void add(int arm, int reward);
  bool has(int arm) const { return observed_[static_cast<std::size_t>(arm)] >= 0; }
  int reward(int arm) const;
  bool r1_known() const { return has(0); }
  int r1() const { return reward(0); }
  const std::vector<std::pair<int, int>>& entries() const { return entries_; }
  int num_arms() const { return static_cast<int>(observed_.size()); }
  /// Best observed reward holder, ties to the lowest arm index; -1 if empty.
  int best_observed_arm() const;

 private:
  std::vector<std::pair<int, int>> entries_;
  std::vector<int> observed_;
};

enum class MechKind { Fee, IcFee, MEpir, IcEpFee, Greedy, FullX };

MechKind mech_kind_from_name(const std::string& name);
std::string mech_kind_name(MechKind kind);

enum class MechPhase { Primary, Secondary, Exploit };

/// Single-episode mechanism state. Protocol per round: step() computes the
/// recommendation (consuming any internal randomness for the round), the
/// caller samples an arm from the portfolio, then observe() applies the
/// outcome. step() past the declared horizon throws.
class Mechanism {
 public:
  virtual ~Mechanism() = default;

  virtual MechKind kind() const = 0;
  virtual Portfolio step(RandomSource& rng) = 0;
  virtual void observe(int arm, int reward) = 0;
  virtual MechPhase phase() const = 0;

  /// True once the recommendation is a fixed point mass forever.
  virtual bool absorbed() const = 0;

  virtual const History& history() const = 0;
  int horizon() const { return horizon_; }
  int rounds_done() const { return rounds_done_; }

 protected:
  explicit Mechanism(int horizon) : horizon_(horizon) {}
  void begin_step();
  void end_observe(const Instance& inst, const Portfolio& last, int arm, int reward);

  int horizon_ = 0;
  int rounds_done_ = 0;
  bool stepped_ = false;
};

/// Posterior-argmax point recommendation (ties to the lowest index): the
/// observed reward for explored arms, the prior mean otherwise.
int greedy_arm(const Instance& inst, const History& hist);

struct MechConfig {
  MechKind kind = MechKind::Fee;
  std::optional<MarginPair> margin;  // required by the phased IC mechanisms
};

/// Builds a mechanism for one episode of `horizon` rounds. `policy` is
/// required for the FEE family (kinds Fee and IcFee) and must come from
/// plan() on the same instance.
std::unique_ptr<Mechanism> make_mechanism(const MechConfig& config,
                                          std::shared_ptr<const Instance> inst,
                                          std::shared_ptr<const Policy> policy,
                                          int horizon);

}  // namespace fidex
