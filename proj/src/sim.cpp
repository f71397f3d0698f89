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
#include "fidex/sim.hpp"

#include <cmath>
#include <numeric>
#include <thread>

namespace fidex {

namespace {

constexpr std::uint64_t kArrivalStreamTag = 0x41525256ULL;  // keeps sigma draws
                                                            // off the episode stream

int sample_from_portfolio(const Portfolio& p, RandomSource& rng) {
  std::vector<Rat> probs;
  probs.reserve(p.entries.size());
  for (const auto& [arm, prob] : p.entries) probs.push_back(prob);
  return p.entries[rng.draw(probs)].first;
}

}  // namespace

Realization sample_realization(const Instance& inst, RandomSource& rng) {
  Realization out;
  out.rewards.reserve(static_cast<std::size_t>(inst.num_arms));
  for (int i = 0; i < inst.num_arms; ++i) {
    const RewardPmf& pmf = inst.arms[static_cast<std::size_t>(i)];
    std::vector<int> values;
    std::vector<Rat> probs;
    for (int c = pmf.support_min(); c <= pmf.support_max(); ++c) {
      if (pmf.prob(c) == 0) continue;
      values.push_back(c);
      probs.push_back(pmf.prob(c));
    }
    out.rewards.push_back(values[rng.draw(probs)]);
  }
  return out;
}

EpisodeTrace run_episode(std::shared_ptr<const Instance> inst, const MechConfig& config,
                         std::shared_ptr<const Policy> policy, int n,
                         std::uint64_t master_seed, std::uint64_t episode_index,
                         const EpisodeOptions& options) {
  if (n < 1) throw InputError("episode length must be at least 1");
  const std::uint64_t episode_seed = derive_stream(master_seed, episode_index);
  StreamSource stream(episode_seed);

  EpisodeTrace trace;
  trace.kind = config.kind;
  trace.n = n;
  trace.realization = sample_realization(*inst, stream);

  std::vector<int> agents;
  if (options.arrival == ArrivalKind::UniformPermutation) {
    agents.resize(static_cast<std::size_t>(n));
    std::iota(agents.begin(), agents.end(), 1);
    SplitMix64 sigma(derive_stream(episode_seed, kArrivalStreamTag));
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(sigma.next() % static_cast<std::uint64_t>(i + 1));
      std::swap(agents[static_cast<std::size_t>(i)], agents[static_cast<std::size_t>(j)]);
    }
  }

  auto mech = make_mechanism(config, inst, std::move(policy), n);
  const bool full = options.full || static_cast<bool>(options.hook);
  long long reward_sum = 0;

  for (int round = 0; round < n; ++round) {
    if (!full && mech->absorbed()) {
      const Portfolio fixed = mech->step(stream);
      const int arm = fixed.point_arm();
      const int reward = trace.realization.rewards[static_cast<std::size_t>(arm)];
      mech->observe(arm, reward);
      reward_sum += static_cast<long long>(reward) * (n - round);
      if (options.collect_rounds) {
        trace.rounds.push_back(RoundRecord{
            fixed, arm, reward, mech->phase(),
            agents.empty() ? round + 1 : agents[static_cast<std::size_t>(round)]});
      }
      break;
    }
    const MechPhase phase_before = mech->phase();
    const Portfolio rec = mech->step(stream);
    if (options.hook) options.hook(round, mech->history(), rec);
    const int arm = sample_from_portfolio(rec, stream);
    const int reward = trace.realization.rewards[static_cast<std::size_t>(arm)];
    mech->observe(arm, reward);
    reward_sum += reward;
    if (phase_before == MechPhase::Primary) ++trace.primary_rounds;
    if (phase_before == MechPhase::Secondary) ++trace.secondary_rounds;
    if (options.collect_rounds) {
      trace.rounds.push_back(RoundRecord{
          rec, arm, reward, phase_before,
          agents.empty() ? round + 1 : agents[static_cast<std::size_t>(round)]});
    }
  }

  trace.welfare = Rat(reward_sum, n);
  return trace;
}

namespace {

struct Accumulator {
  long long count = 0;
  double mean = 0;
  double m2 = 0;
  long long n1_sum = 0;
  long long n2_sum = 0;

  void add(double value, long long n1, long long n2) {
    ++count;
    const double d = value - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (value - mean);
    n1_sum += n1;
    n2_sum += n2;
  }

  void combine(const Accumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double d = other.mean - mean;
    const auto total = count + other.count;
    m2 += other.m2 + d * d * static_cast<double>(count) *
                         static_cast<double>(other.count) / static_cast<double>(total);
    mean += d * static_cast<double>(other.count) / static_cast<double>(total);
    count = total;
    n1_sum += other.n1_sum;
    n2_sum += other.n2_sum;
  }
};

}  // namespace

WelfareEstimate estimate_welfare(std::shared_ptr<const Instance> inst,
                                 const MechConfig& config,
                                 std::shared_ptr<const Policy> policy, int n,
                                 long long runs, std::uint64_t seed, int threads) {
  if (runs < 1) throw InputError("need at least one run");
  if (threads < 1) threads = 1;
  if (threads > runs) threads = static_cast<int>(runs);

  std::vector<Accumulator> parts(static_cast<std::size_t>(threads));
  const auto worker = [&](int part, long long begin, long long end) {
    Accumulator& acc = parts[static_cast<std::size_t>(part)];
    for (long long episode = begin; episode < end; ++episode) {
      const EpisodeTrace trace =
          run_episode(inst, config, policy, n, seed,
                      static_cast<std::uint64_t>(episode));
      acc.add(to_double(trace.welfare), trace.primary_rounds, trace.secondary_rounds);
    }
  };

  if (threads == 1) {
    worker(0, 0, runs);
  } else {
    std::vector<std::thread> pool;
    const long long chunk = (runs + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const long long begin = static_cast<long long>(t) * chunk;
      const long long end = std::min(runs, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, t, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  Accumulator total;
  for (const Accumulator& part : parts) total.combine(part);

  WelfareEstimate est;
  est.mean = total.mean;
  est.std_error = total.count > 1
                      ? std::sqrt(total.m2 / (static_cast<double>(total.count) *
                                              static_cast<double>(total.count - 1)))
                      : 0.0;
  est.runs = runs;
  est.seed = seed;
  est.n = n;
  est.mean_n1 = static_cast<double>(total.n1_sum) / static_cast<double>(runs);
  est.mean_n2 = static_cast<double>(total.n2_sum) / static_cast<double>(runs);
  return est;
}

std::pair<double, double> phase_stats(const std::vector<EpisodeTrace>& traces) {
  if (traces.empty()) throw InputError("no traces");
  long long n1 = 0, n2 = 0;
  for (const EpisodeTrace& t : traces) {
    if (t.kind != MechKind::Fee) {
      throw InputError("phase statistics are defined for FEE traces only");
    }
    n1 += t.primary_rounds;
    n2 += t.secondary_rounds;
  }
  const auto count = static_cast<double>(traces.size());
  return {static_cast<double>(n1) / count, static_cast<double>(n2) / count};
}

double welfare_gap(const Rat& opt_eair, const WelfareEstimate& estimate) {
  return static_cast<double>(estimate.n) * (to_double(opt_eair) - estimate.mean);
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "mech,n,runs,seed,mean,std_error,mean_n1,mean_n2,opt,opt_eair,gap\n";
  for (const ResultRow& row : rows) {
    out += row.mech;
    out += ',' + std::to_string(row.estimate.n);
    out += ',' + std::to_string(row.estimate.runs);
    out += ',' + std::to_string(row.estimate.seed);
    out += ',' + format_double(row.estimate.mean);
    out += ',' + format_double(row.estimate.std_error);
    out += ',' + format_double(row.estimate.mean_n1);
    out += ',' + format_double(row.estimate.mean_n2);
    out += ',' + format_rational(row.opt);
    out += ',' + format_rational(row.opt_eair);
    out += ',' + format_double(row.gap);
    out += '\n';
  }
  return out;
}

}  // namespace fidex
