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
#include "fidex/mechanisms.hpp"

#include <algorithm>

namespace fidex {

std::size_t RandomSource::draw_uniform(std::size_t n) {
  if (n == 0) throw InputError("draw_uniform over an empty range");
  std::vector<Rat> probs(n, Rat(1, static_cast<long long>(n)));
  return draw(probs);
}

std::size_t StreamSource::draw(const std::vector<Rat>& probs) {
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

  const Rat u = rat_from_double(rng_.next_double());
  Rat cum(0);
  for (std::size_t idx = 0; idx < probs.size(); ++idx) {
    cum += probs[idx];
    if (u < cum) return idx;
  }
  return last_positive;
}

void History::reset(int num_arms) {
  entries_.clear();
  observed_.assign(static_cast<std::size_t>(num_arms), -1);
}

void History::add(int arm, int reward) {
  if (arm < 0 || arm >= num_arms()) throw InputError("arm index out of range");
  int& slot = observed_[static_cast<std::size_t>(arm)];
  if (slot >= 0 && slot != reward) {
    throw InputError("conflicting reward for an already-observed arm");
  }
  slot = reward;
  entries_.emplace_back(arm, reward);
}

int History::reward(int arm) const {
  const int r = observed_[static_cast<std::size_t>(arm)];
  if (r < 0) throw InputError("arm not observed yet");
  return r;
}

int History::best_observed_arm() const {
  int best = -1;
  for (int arm = 0; arm < num_arms(); ++arm) {
    const int r = observed_[static_cast<std::size_t>(arm)];
    if (r < 0) continue;
    if (best < 0 || r > observed_[static_cast<std::size_t>(best)]) best = arm;
  }
  return best;
}

MechKind mech_kind_from_name(const std::string& name) {
  if (name == "fee") return MechKind::Fee;
  if (name == "icfee") return MechKind::IcFee;
  if (name == "mepir") return MechKind::MEpir;
  if (name == "icepfee") return MechKind::IcEpFee;
  if (name == "greedy") return MechKind::Greedy;
  if (name == "fullx") return MechKind::FullX;
  throw InputError("unknown mechanism: " + name);
}

std::string mech_kind_name(MechKind kind) {
  switch (kind) {
    case MechKind::Fee: return "fee";
    case MechKind::IcFee: return "icfee";
    case MechKind::MEpir: return "mepir";
    case MechKind::IcEpFee: return "icepfee";
    case MechKind::Greedy: return "greedy";
    case MechKind::FullX: return "fullx";
  }
  throw InputError("unknown mechanism kind");
}

void Mechanism::begin_step() {
  if (stepped_) throw InputError("step() called twice without observe()");
  if (rounds_done_ >= horizon_) throw InputError("mechanism horizon exhausted");
  stepped_ = true;
}

void Mechanism::end_observe(const Instance& inst, const Portfolio& last, int arm,
                            int reward) {
  if (!stepped_) throw InputError("observe() without a preceding step()");
  if (last.prob(arm) == 0) {
    throw InputError("observed arm is outside the recommended portfolio");
  }
  if (reward < 0 || reward > inst.max_reward ||
      inst.arms[static_cast<std::size_t>(arm)].prob(reward) == 0) {
    throw InputError("reward outside the arm's support");
  }
  stepped_ = false;
  ++rounds_done_;
}

int greedy_arm(const Instance& inst, const History& hist) {
  int best = 0;
  Rat best_value = hist.has(0) ? Rat(hist.reward(0)) : inst.mean(0);
  for (int arm = 1; arm < inst.num_arms; ++arm) {
    const Rat value = hist.has(arm) ? Rat(hist.reward(arm)) : inst.mean(arm);
    if (value > best_value) {
      best = arm;
      best_value = value;
    }
  }
  return best;
}

namespace {

// ---------------------------------------------------------------------------
// FEE: primary exploration walks the optimal exploration policy; once a
// reward above R1 is known, secondary exploration leverages it to probe the
// remaining arms; finally the best observed arm is recommended forever.
// ---------------------------------------------------------------------------
class FeeMechanism final : public Mechanism {
 public:
  FeeMechanism(std::shared_ptr<const Instance> inst,
               std::shared_ptr<const Policy> policy, int horizon)
      : Mechanism(horizon), inst_(std::move(inst)), policy_(std::move(policy)) {
    if (!policy_ || policy_->instance.get() != inst_.get()) {
      throw InputError("policy does not belong to this instance");
    }
    hist_.reset(inst_->num_arms);
    state_ = initial_state(*inst_);
  }

  MechKind kind() const override { return MechKind::Fee; }
  MechPhase phase() const override { return phase_; }
  bool absorbed() const override { return phase_ == MechPhase::Exploit; }
  const History& history() const override { return hist_; }

  Portfolio step(RandomSource& rng) override {
    (void)rng;
    begin_step();
    last_ = current_portfolio();
    return last_;
  }

  void observe(int arm, int reward) override {
    end_observe(*inst_, last_, arm, reward);
    ingest(arm, reward);
  }

  /// State update shared with the phased wrappers, which may report
  /// observations of arms FEE did not itself recommend.
  void ingest(int arm, int reward) {
    const bool fresh = !hist_.has(arm);
    hist_.add(arm, reward);
    if (!fresh) return;
    switch (phase_) {
      case MechPhase::Primary: {
        state_ = state_after(state_, arm, reward);
        if (state_.alpha < state_.beta) {
          secondary_u_ = state_.unobserved;
          phase_ = MechPhase::Secondary;
          prune_secondary();
        } else if (is_terminal(state_, *inst_)) {
          phase_ = MechPhase::Exploit;
        }
        break;
      }
      case MechPhase::Secondary: {
        secondary_u_ &= ~(1u << arm);
        prune_secondary();
        break;
      }
      case MechPhase::Exploit:
        break;
    }
  }

 private:
  Portfolio current_portfolio() const {
    switch (phase_) {
      case MechPhase::Primary: {
        if (state_.initial()) return Portfolio::point(0);
        const ActionPair a = policy_->at(state_).action;
        return pair_portfolio(a.i, a.r, state_.alpha, *inst_);
      }
      case MechPhase::Secondary: {
        const int i = lowest_arm(secondary_u_);
        const int rt = hist_.best_observed_arm();
        const Rat r_best(hist_.reward(rt));
        const Rat r1(hist_.r1());
        if (inst_->mean(i) >= r1) return Portfolio::point(i);
        const Rat q = (r_best - r1) / (r_best - inst_->mean(i));
        Portfolio p;
        if (i < rt) {
          p.entries = {{i, q}, {rt, 1 - q}};
        } else {
          p.entries = {{rt, 1 - q}, {i, q}};
        }
        return p;
      }
      case MechPhase::Exploit:
        return Portfolio::point(hist_.best_observed_arm());
    }
    throw InputError("unreachable");
  }

  // Discards arms that cannot beat the best observed reward; empties into
  // exploitation.
  void prune_secondary() {
    const int rt = hist_.best_observed_arm();
    const int r_best = hist_.reward(rt);
    while (secondary_u_ != 0) {
      const int i = lowest_arm(secondary_u_);
      if (inst_->arms[static_cast<std::size_t>(i)].support_max() <= r_best) {
        secondary_u_ &= ~(1u << i);
      } else {
        break;
      }
    }
    if (secondary_u_ == 0) phase_ = MechPhase::Exploit;
  }

  std::shared_ptr<const Instance> inst_;
  std::shared_ptr<const Policy> policy_;
  History hist_;
  GmdpState state_;
  ArmSet secondary_u_ = 0;
  MechPhase phase_ = MechPhase::Primary;
  Portfolio last_;
};

// ---------------------------------------------------------------------------
// GREEDY: the delegate; exploits the posterior argmax every round.
// ---------------------------------------------------------------------------
class GreedyMechanism final : public Mechanism {
 public:
  GreedyMechanism(std::shared_ptr<const Instance> inst, int horizon)
      : Mechanism(horizon), inst_(std::move(inst)) {
    hist_.reset(inst_->num_arms);
  }

  MechKind kind() const override { return MechKind::Greedy; }
  MechPhase phase() const override { return MechPhase::Exploit; }
  bool absorbed() const override {
    return hist_.has(greedy_arm(*inst_, hist_));
  }
  const History& history() const override { return hist_; }

  Portfolio step(RandomSource&) override {
    begin_step();
    last_ = Portfolio::point(greedy_arm(*inst_, hist_));
    return last_;
  }

  void observe(int arm, int reward) override {
    end_observe(*inst_, last_, arm, reward);
    hist_.add(arm, reward);
  }

 private:
  std::shared_ptr<const Instance> inst_;
  History hist_;
  Portfolio last_;
};

// ---------------------------------------------------------------------------
// FULL-EXPLORATION: arms in index order for the first K rounds, then the best.
// ---------------------------------------------------------------------------
class FullExplorationMechanism final : public Mechanism {
 public:
  FullExplorationMechanism(std::shared_ptr<const Instance> inst, int horizon)
      : Mechanism(horizon), inst_(std::move(inst)) {
    hist_.reset(inst_->num_arms);
  }

  MechKind kind() const override { return MechKind::FullX; }
  MechPhase phase() const override {
    return rounds_done_ < inst_->num_arms ? MechPhase::Primary : MechPhase::Exploit;
  }
  bool absorbed() const override { return rounds_done_ >= inst_->num_arms; }
  const History& history() const override { return hist_; }

  Portfolio step(RandomSource&) override {
    begin_step();
    const int arm = rounds_done_ < inst_->num_arms ? rounds_done_
                                                   : hist_.best_observed_arm();
    last_ = Portfolio::point(arm);
    return last_;
  }

  void observe(int arm, int reward) override {
    end_observe(*inst_, last_, arm, reward);
    hist_.add(arm, reward);
  }

 private:
  std::shared_ptr<const Instance> inst_;
  History hist_;
  Portfolio last_;
};

// ---------------------------------------------------------------------------
// M_EPIR: observe the default arm, then explore every arm whose prior mean
// weakly beats R1 (in mean order), then exploit the best observed arm.
// ---------------------------------------------------------------------------
class MEpirMechanism final : public Mechanism {
 public:
  MEpirMechanism(std::shared_ptr<const Instance> inst, int horizon)
      : Mechanism(horizon), inst_(std::move(inst)) {
    hist_.reset(inst_->num_arms);
  }

  MechKind kind() const override { return MechKind::MEpir; }
  MechPhase phase() const override {
    return next_exploration() >= 0 ? MechPhase::Primary : MechPhase::Exploit;
  }
  bool absorbed() const override { return next_exploration() < 0; }
  const History& history() const override { return hist_; }

  Portfolio step(RandomSource&) override {
    begin_step();
    const int arm = next_exploration();
    last_ = Portfolio::point(arm >= 0 ? arm : hist_.best_observed_arm());
    return last_;
  }

  void observe(int arm, int reward) override {
    end_observe(*inst_, last_, arm, reward);
    ingest(arm, reward);
  }

  void ingest(int arm, int reward) { hist_.add(arm, reward); }

 private:
  /// Next arm to explore (the default arm first, then unobserved arms with
  /// mean >= R1 in descending-mean order); -1 when exploiting.
  int next_exploration() const {
    if (!hist_.r1_known()) return 0;
    const Rat r1(hist_.r1());
    for (int arm = 1; arm < inst_->num_arms; ++arm) {
      if (!hist_.has(arm) && inst_->mean(arm) >= r1) return arm;
    }
    return -1;
  }

  std::shared_ptr<const Instance> inst_;
  History hist_;
  Portfolio last_;
};

// ---------------------------------------------------------------------------
// Phased IC wrappers. Rounds are grouped into phases; one uniformly placed
// round per phase follows the inner mechanism, the rest exploit in a way the
// recommended agent cannot distinguish from exploration.
// ---------------------------------------------------------------------------
template <typename Inner>
class PhasedMechanism : public Mechanism {
 public:
  PhasedMechanism(std::shared_ptr<const Instance> inst, Inner inner,
                  const MarginPair& margin, int horizon)
      : Mechanism(horizon),
        inst_(std::move(inst)),
        inner_(std::move(inner)),
        phase_length_(margin.phase_length) {
    if (phase_length_ < 1) throw InputError("phase length must be positive");
    hist_.reset(inst_->num_arms);
  }

  MechPhase phase() const override { return inner_.phase(); }
  bool absorbed() const override { return follow_inner_ && inner_.absorbed(); }
  const History& history() const override { return hist_; }

  Portfolio step(RandomSource& rng) override {
    begin_step();
    const int l = rounds_done_ + 1;  // 1-based agent index
    const int k = inst_->num_arms;
    if (l == 1) {
      last_ = first_round();
    } else if (l <= k) {
      last_ = early_round();
    } else {
      const int offset = (l - k - 1) % static_cast<int>(phase_length_);
      if (offset == 0 && !follow_inner_) {
        if (inner_.absorbed()) {
          follow_inner_ = true;
        } else {
          // Uniform explorer slot over the actual length of this phase (the
          // trailing phase may be shorter than B).
          const int remaining = horizon_ - (l - 1);
          const int len = std::min<int>(static_cast<int>(phase_length_), remaining);
          explorer_offset_ = static_cast<int>(rng.draw_uniform(static_cast<std::size_t>(len)));
        }
      }
      if (follow_inner_) {
        last_ = inner_.step(rng);
        inner_stepped_ = true;
      } else if (offset == explorer_offset_) {
        last_ = inner_.step(rng);
        inner_stepped_ = true;
      } else {
        last_ = rest_of_phase();
      }
    }
    return last_;
  }

  void observe(int arm, int reward) override {
    end_observe(*inst_, last_, arm, reward);
    hist_.add(arm, reward);
    if (inner_stepped_) {
      inner_.observe(arm, reward);
      inner_stepped_ = false;
    } else {
      inner_.ingest(arm, reward);
    }
  }

 protected:
  virtual Portfolio first_round() = 0;
  virtual Portfolio early_round() = 0;
  virtual Portfolio rest_of_phase() = 0;

  std::shared_ptr<const Instance> inst_;
  Inner inner_;
  History hist_;
  Portfolio last_;
  long long phase_length_;
  int explorer_offset_ = -1;
  bool follow_inner_ = false;
  bool inner_stepped_ = false;
};

class IcFeeMechanism final : public PhasedMechanism<FeeMechanism> {
 public:
  IcFeeMechanism(std::shared_ptr<const Instance> inst,
                 std::shared_ptr<const Policy> policy, const MarginPair& margin,
                 int horizon)
      : PhasedMechanism(inst, FeeMechanism(inst, std::move(policy), horizon),
                        margin, horizon) {}

  MechKind kind() const override { return MechKind::IcFee; }

 protected:
  // The exploration policy can only pick the default arm in round one, so
  // this coincides with the inner mechanism's first recommendation.
  Portfolio first_round() override { return Portfolio::point(0); }

  Portfolio early_round() override {
    if (Rat(hist_.r1()) < inst_->means.back()) {
      return Portfolio::point(greedy_arm(*inst_, hist_));
    }
    return Portfolio::point(0);
  }

  Portfolio rest_of_phase() override {
    const int best = hist_.best_observed_arm();
    if (best >= 0 && hist_.reward(best) > hist_.r1()) {
      return Portfolio::point(greedy_arm(*inst_, hist_));
    }
    return Portfolio::point(0);
  }
};

class IcEpFeeMechanism final : public PhasedMechanism<MEpirMechanism> {
 public:
  IcEpFeeMechanism(std::shared_ptr<const Instance> inst, const MarginPair& margin,
                   int horizon)
      : PhasedMechanism(inst, MEpirMechanism(inst, horizon), margin, horizon) {}

  MechKind kind() const override { return MechKind::IcEpFee; }

 protected:
  Portfolio first_round() override {
    return Portfolio::point(greedy_arm(*inst_, hist_));
  }
  Portfolio early_round() override {
    return Portfolio::point(greedy_arm(*inst_, hist_));
  }
  Portfolio rest_of_phase() override {
    return Portfolio::point(greedy_arm(*inst_, hist_));
  }
};

}  // namespace

std::unique_ptr<Mechanism> make_mechanism(const MechConfig& config,
                                          std::shared_ptr<const Instance> inst,
                                          std::shared_ptr<const Policy> policy,
                                          int horizon) {
  if (horizon < 1) throw InputError("horizon must be at least 1");
  switch (config.kind) {
    case MechKind::Fee:
      return std::make_unique<FeeMechanism>(std::move(inst), std::move(policy), horizon);
    case MechKind::IcFee: {
      if (!config.margin) throw InputError("icfee needs a margin pair");
      const AssumptionReport report = validate(*inst);
      if (!report.ic_assumption_holds) {
        throw InputError("icfee requires the IC assumption to hold");
      }
      return std::make_unique<IcFeeMechanism>(inst, std::move(policy),
                                              *config.margin, horizon);
    }
    case MechKind::MEpir:
      return std::make_unique<MEpirMechanism>(std::move(inst), horizon);
    case MechKind::IcEpFee: {
      if (!config.margin) throw InputError("icepfee needs a margin pair");
      const AssumptionReport report = validate(*inst);
      if (!report.ic_assumption_holds) {
        throw InputError("icepfee requires the IC assumption to hold");
      }
      return std::make_unique<IcEpFeeMechanism>(inst, *config.margin, horizon);
    }
    case MechKind::Greedy:
      return std::make_unique<GreedyMechanism>(std::move(inst), horizon);
    case MechKind::FullX:
      return std::make_unique<FullExplorationMechanism>(std::move(inst), horizon);
  }
  throw InputError("unknown mechanism kind");
}

}  // namespace fidex
