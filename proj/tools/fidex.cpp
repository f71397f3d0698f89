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
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "fidex/audit.hpp"
#include "fidex/instance.hpp"
#include "fidex/sim.hpp"
#include "fidex/tree.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAuditFailure = 2;
constexpr int kExitBudget = 3;
constexpr int kExitBadInput = 4;

std::shared_ptr<const fidex::Instance> load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fidex::InputError("cannot open instance file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return std::make_shared<const fidex::Instance>(fidex::parse_instance(buffer.str()));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fidex::InputError("cannot open output file: " + path);
  out << content;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

bool needs_policy(fidex::MechKind kind) {
  return kind == fidex::MechKind::Fee || kind == fidex::MechKind::IcFee;
}

bool needs_margin(fidex::MechKind kind) {
  return kind == fidex::MechKind::IcFee || kind == fidex::MechKind::IcEpFee;
}

fidex::MechConfig build_mech_config(const fidex::Instance& inst, const std::string& name,
                                    long long phase_b) {
  fidex::MechConfig config;
  config.kind = fidex::mech_kind_from_name(name);
  if (needs_margin(config.kind)) {
    fidex::MarginPair margin = fidex::exploration_margin(inst);
    if (phase_b > 0) margin.phase_length = phase_b;
    config.margin = margin;
  }
  return config;
}

std::string phase_name(fidex::MechPhase phase) {
  switch (phase) {
    case fidex::MechPhase::Primary: return "primary";
    case fidex::MechPhase::Secondary: return "secondary";
    case fidex::MechPhase::Exploit: return "exploit";
  }
  return "?";
}

std::string portfolio_text(const fidex::Portfolio& p) {
  std::string out = "{";
  for (std::size_t idx = 0; idx < p.entries.size(); ++idx) {
    if (idx > 0) out += ';';
    out += "a" + std::to_string(p.entries[idx].first + 1) + ":" +
           fidex::format_rational(p.entries[idx].second);
  }
  return out + "}";
}

std::string audit_csv(const fidex::AuditReport& report) {
  std::string out = "round,constraint,margin_num,margin_den,pass\n";
  for (const fidex::AuditRow& row : report.rows) {
    out += std::to_string(row.round);
    out += ',' + row.constraint;
    out += ',' + numerator(row.margin).str();
    out += ',' + denominator(row.margin).str();
    out += row.pass ? ",1\n" : ",0\n";
  }
  return out;
}

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t budget_states = std::size_t(1) << 20;
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact planner, mechanisms and audits for fiduciary bandit exploration"};
  app.require_subcommand(1);
  app.fallthrough();
  // --h is a real option (max reward), so help lives on --help only.
  app.set_help_flag("--help", "print help");

  GlobalOpts global;
  app.add_option("--seed", global.seed, "master seed");
  app.add_option("--threads", global.threads, "worker threads for simulation");
  app.add_option("--budget-states", global.budget_states, "planner state budget");
  app.add_option("--out,-o", global.out, "output path (default: stdout)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a named instance family");
  std::string gen_family = "uniform";
  int gen_k = 2, gen_h = 1;
  std::string gen_eps = "0";
  gen->add_option("--family", gen_family, "prop5|prop6|prop7|prop9_uniform|uniform|random");
  gen->add_option("--k", gen_k, "number of arms");
  gen->add_option("--h", gen_h, "maximum reward");
  gen->add_option("--eps", gen_eps, "rational epsilon, e.g. 1/1000000");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "compute the optimal exploration policy");
  std::string plan_inst;
  plan_cmd->add_option("--inst", plan_inst, "instance file")->required();

  // tree
  auto* tree_cmd = app.add_subcommand("tree", "export the policy tree");
  std::string tree_inst;
  int tree_branch = -1;
  tree_cmd->add_option("--inst", tree_inst, "instance file")->required();
  tree_cmd->add_option("--branch", tree_branch, "restrict to one value of the default reward");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo welfare estimation");
  std::string sim_inst, sim_mech = "fee", sim_trace, sim_arrival = "known";
  std::vector<int> sim_n{1000};
  long long sim_runs = 1000, sim_phase_b = 0;
  sim_cmd->add_option("--inst", sim_inst, "instance file")->required();
  sim_cmd->add_option("--mech", sim_mech, "fee|icfee|mepir|icepfee|greedy|fullx");
  sim_cmd->add_option("--n", sim_n, "episode lengths");
  sim_cmd->add_option("--runs", sim_runs, "episodes per length");
  sim_cmd->add_option("--phase-b", sim_phase_b, "override the phase length B");
  sim_cmd->add_option("--trace", sim_trace, "write one episode's round log to this file");
  sim_cmd->add_option("--arrival", sim_arrival, "known|uniform agent arrival");

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "exact per-round constraint checks");
  std::string audit_inst, audit_mech = "fee", audit_check = "eair";
  long long audit_episodes = 1000, audit_phase_b = 0;
  int audit_n = 0;
  audit_cmd->add_option("--inst", audit_inst, "instance file")->required();
  audit_cmd->add_option("--mech", audit_mech, "mechanism to audit");
  audit_cmd->add_option("--episodes", audit_episodes, "number of episodes");
  audit_cmd->add_option("--check", audit_check, "eair|epir");
  audit_cmd->add_option("--n", audit_n, "rounds per episode (default 4K(H+1))");
  audit_cmd->add_option("--phase-b", audit_phase_b, "override the phase length B");

  // ic-check
  auto* ic_cmd = app.add_subcommand("ic-check", "exact incentive-compatibility check");
  std::string ic_inst, ic_mech = "icfee";
  int ic_n = 10;
  long long ic_phase_b = 0;
  std::size_t ic_budget = 5'000'000;
  ic_cmd->add_option("--inst", ic_inst, "instance file")->required();
  ic_cmd->add_option("--mech", ic_mech, "mechanism to check");
  ic_cmd->add_option("--n", ic_n, "horizon");
  ic_cmd->add_option("--phase-b", ic_phase_b, "override the phase length B");
  ic_cmd->add_option("--budget-paths", ic_budget, "enumeration path budget");

  // ratios
  auto* ratios_cmd = app.add_subcommand("ratios", "welfare benchmarks and ratio table");
  std::vector<std::string> ratio_families;
  std::vector<std::string> ratio_insts;
  std::vector<std::string> ratio_mechs;
  int ratio_k = 10, ratio_h = 10, ratio_n = 1000;
  long long ratio_runs = 0;
  std::string ratio_eps = "1/1000000";
  ratios_cmd->add_option("--families", ratio_families, "generator families");
  ratios_cmd->add_option("--inst", ratio_insts, "instance files");
  ratios_cmd->add_option("--mech", ratio_mechs, "mechanisms to simulate per instance");
  ratios_cmd->add_option("--k", ratio_k, "arms for generated families");
  ratios_cmd->add_option("--h", ratio_h, "max reward for generated families");
  ratios_cmd->add_option("--eps", ratio_eps, "epsilon for generated families");
  ratios_cmd->add_option("--n", ratio_n, "episode length for simulated mechanisms");
  ratios_cmd->add_option("--runs", ratio_runs, "episodes per mechanism");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (gen->parsed()) {
      fidex::GenParams params;
      params.k = gen_k;
      params.h = gen_h;
      params.eps = fidex::parse_rational(gen_eps);
      params.seed = global.seed;
      const fidex::Instance inst = fidex::generate(fidex::family_from_name(gen_family), params);
      emit(global.out, fidex::instance_to_json(inst));
      return kExitOk;
    }

    if (plan_cmd->parsed()) {
      auto inst = load_instance(plan_inst);
      const fidex::Policy policy = fidex::plan(inst, global.budget_states);
      std::ostringstream out;
      out << "W(s0) = " << fidex::format_rational(policy.root_value) << " ("
          << fidex::format_double(fidex::to_double(policy.root_value)) << ")\n"
          << "states = " << policy.state_count << "\n";
      emit(global.out, out.str());
      return kExitOk;
    }

    if (tree_cmd->parsed()) {
      auto inst = load_instance(tree_inst);
      const fidex::Policy policy = fidex::plan(inst, global.budget_states);
      std::optional<int> branch;
      if (tree_branch >= 0) branch = tree_branch;
      emit(global.out, fidex::export_policy_tree(policy, branch));
      return kExitOk;
    }

    if (sim_cmd->parsed()) {
      auto inst = load_instance(sim_inst);
      const fidex::MechConfig config = build_mech_config(*inst, sim_mech, sim_phase_b);
      std::shared_ptr<const fidex::Policy> policy;
      if (needs_policy(config.kind)) {
        policy = std::make_shared<const fidex::Policy>(fidex::plan(inst, global.budget_states));
      }
      const fidex::WelfareBenchmarks bench =
          fidex::welfare_benchmarks(inst, policy ? policy.get() : nullptr);
      std::vector<fidex::ResultRow> rows;
      for (const int n : sim_n) {
        fidex::ResultRow row;
        row.mech = sim_mech;
        row.estimate = fidex::estimate_welfare(inst, config, policy, n, sim_runs,
                                               global.seed, global.threads);
        row.opt = bench.opt;
        row.opt_eair = bench.opt_eair;
        row.gap = fidex::welfare_gap(bench.opt_eair, row.estimate);
        rows.push_back(std::move(row));
      }
      emit(global.out, fidex::results_csv(rows));
      if (!sim_trace.empty()) {
        fidex::EpisodeOptions opts;
        opts.collect_rounds = true;
        opts.full = true;
        opts.arrival = sim_arrival == "uniform" ? fidex::ArrivalKind::UniformPermutation
                                                : fidex::ArrivalKind::KnownPosition;
        const fidex::EpisodeTrace trace =
            fidex::run_episode(inst, config, policy, sim_n.front(), global.seed, 0, opts);
        std::string text = "round,arm,reward,phase,portfolio\n";
        for (std::size_t r = 0; r < trace.rounds.size(); ++r) {
          const fidex::RoundRecord& rec = trace.rounds[r];
          text += std::to_string(r + 1) + ",a" + std::to_string(rec.arm + 1) + "," +
                  std::to_string(rec.reward) + "," + phase_name(rec.phase) + "," +
                  portfolio_text(rec.portfolio) + "\n";
        }
        write_file(sim_trace, text);
      }
      return kExitOk;
    }

    if (audit_cmd->parsed()) {
      auto inst = load_instance(audit_inst);
      const fidex::MechConfig config = build_mech_config(*inst, audit_mech, audit_phase_b);
      std::shared_ptr<const fidex::Policy> policy;
      if (needs_policy(config.kind)) {
        policy = std::make_shared<const fidex::Policy>(fidex::plan(inst, global.budget_states));
      }
      const bool epir = audit_check == "epir";
      if (!epir && audit_check != "eair") {
        throw fidex::InputError("unknown check: " + audit_check);
      }
      const int n = audit_n > 0 ? audit_n : 4 * inst->num_arms * (inst->max_reward + 1);
      fidex::AuditReport report;
      for (long long episode = 0; episode < audit_episodes; ++episode) {
        fidex::EpisodeOptions opts;
        opts.hook = [&](int round, const fidex::History& hist, const fidex::Portfolio& rec) {
          const fidex::CheckResult result = epir ? fidex::check_epir(*inst, hist, rec)
                                                 : fidex::check_eair(*inst, hist, rec);
          // Keep the CSV bounded: log violations always, plus round one of
          // each episode as a heartbeat.
          if (!result.pass || round == 0) {
            report.add(round + 1,
                       (epir ? std::string("epir ep=") : std::string("eair ep=")) +
                           std::to_string(episode),
                       result.margin);
          } else if (result.margin < report.worst_margin) {
            report.worst_margin = result.margin;
          }
        };
        fidex::run_episode(inst, config, policy, n, global.seed,
                           static_cast<std::uint64_t>(episode), opts);
      }
      emit(global.out, audit_csv(report));
      return report.all_pass ? kExitOk : kExitAuditFailure;
    }

    if (ic_cmd->parsed()) {
      auto inst = load_instance(ic_inst);
      fidex::IcCheckConfig config;
      config.mech = build_mech_config(*inst, ic_mech, ic_phase_b);
      config.horizon = ic_n;
      config.max_paths = ic_budget;
      std::shared_ptr<const fidex::Policy> policy;
      if (needs_policy(config.mech.kind)) {
        policy = std::make_shared<const fidex::Policy>(fidex::plan(inst, global.budget_states));
      }
      const fidex::AuditReport report = fidex::check_ic_exact(inst, policy, config);
      emit(global.out, audit_csv(report));
      return report.all_pass ? kExitOk : kExitAuditFailure;
    }

    if (ratios_cmd->parsed()) {
      std::string csv =
          "instance,K,H,mech,n,runs,mean,std_error,"
          "opt,opt_dec,opt_eair,opt_eair_dec,opt_epir,opt_epir_dec,opt_del,opt_del_dec,"
          "ratio_opt_over_eair,ratio_eair_over_epir,ratio_epir_over_del,audit\n";
      std::vector<std::pair<std::string, std::shared_ptr<const fidex::Instance>>> instances;
      for (const std::string& family : ratio_families) {
        fidex::GenParams params;
        params.k = ratio_k;
        params.h = ratio_h;
        params.eps = fidex::parse_rational(ratio_eps);
        params.seed = global.seed;
        instances.emplace_back(family, std::make_shared<const fidex::Instance>(fidex::generate(
                                           fidex::family_from_name(family), params)));
      }
      for (const std::string& path : ratio_insts) {
        instances.emplace_back(path, load_instance(path));
      }
      if (instances.empty()) throw fidex::InputError("ratios: no instances given");

      for (const auto& [label, inst] : instances) {
        const auto policy =
            std::make_shared<const fidex::Policy>(fidex::plan(inst, global.budget_states));
        const fidex::WelfareBenchmarks bench = fidex::welfare_benchmarks(inst, policy.get());
        const auto ratio = [](const fidex::Rat& a, const fidex::Rat& b) {
          return b == 0 ? std::string("inf")
                        : fidex::format_double(fidex::to_double(a / b));
        };
        const std::string bench_cols =
            fidex::format_rational(bench.opt) + ',' +
            fidex::format_double(fidex::to_double(bench.opt)) + ',' +
            fidex::format_rational(bench.opt_eair) + ',' +
            fidex::format_double(fidex::to_double(bench.opt_eair)) + ',' +
            fidex::format_rational(bench.opt_epir) + ',' +
            fidex::format_double(fidex::to_double(bench.opt_epir)) + ',' +
            fidex::format_rational(bench.opt_del) + ',' +
            fidex::format_double(fidex::to_double(bench.opt_del)) + ',' +
            ratio(bench.opt, bench.opt_eair) + ',' + ratio(bench.opt_eair, bench.opt_epir) +
            ',' + ratio(bench.opt_epir, bench.opt_del);
        const std::string prefix = label + ',' + std::to_string(inst->num_arms) + ',' +
                                   std::to_string(inst->max_reward);
        if (ratio_mechs.empty() || ratio_runs <= 0) {
          csv += prefix + ",,,,,," + bench_cols + ",\n";
          continue;
        }
        for (const std::string& mech : ratio_mechs) {
          const fidex::MechConfig config = build_mech_config(*inst, mech, 0);
          const fidex::WelfareEstimate est = fidex::estimate_welfare(
              inst, config, policy, ratio_n, ratio_runs, global.seed, global.threads);
          // Spot audit: exact EAIR check over the first simulated episode.
          bool audit_ok = true;
          fidex::EpisodeOptions opts;
          opts.hook = [&](int, const fidex::History& hist, const fidex::Portfolio& rec) {
            audit_ok = audit_ok && fidex::check_eair(*inst, hist, rec).pass;
          };
          fidex::run_episode(inst, config, policy, ratio_n, global.seed, 0, opts);
          csv += prefix + ',' + mech + ',' + std::to_string(ratio_n) + ',' +
                 std::to_string(ratio_runs) + ',' + fidex::format_double(est.mean) + ',' +
                 fidex::format_double(est.std_error) + ',' + bench_cols + ',' +
                 (audit_ok ? "pass" : "fail") + "\n";
        }
      }
      emit(global.out, csv);
      return kExitOk;
    }
  } catch (const fidex::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const fidex::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitBadInput;
}
