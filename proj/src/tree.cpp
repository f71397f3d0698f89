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
#include "fidex/tree.hpp"

#include <sstream>

namespace fidex {

namespace {

std::string bits_of(ArmSet set, int k) {
  std::string out(static_cast<std::size_t>(k), '0');
  for (int i = 0; i < k; ++i) {
    if (has_arm(set, i)) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

std::string value_or_dash(int v) { return v < 0 ? "-" : std::to_string(v); }

struct Exporter {
  const Policy& policy;
  const Instance& inst;
  std::ostringstream out;

  void line(int depth, const std::string& edge, const GmdpState& s, bool aggregated,
            const Rat& value) {
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    if (!edge.empty()) out << "[" << edge << "] ";
    out << "U=" << bits_of(s.unobserved, inst.num_arms)
        << " alpha=" << value_or_dash(s.alpha)
        << " beta=" << (aggregated ? std::string("*") : value_or_dash(s.beta));
    if (!aggregated && (s.initial() || !is_terminal(s, inst))) {
      const PolicyEntry& entry = policy.at(s);
      const Portfolio p = s.initial()
                              ? Portfolio::point(0)
                              : pair_portfolio(entry.action.i, entry.action.r, s.alpha, inst);
      out << " action=p_{" << entry.action.i + 1 << "," << entry.action.r + 1 << "}("
          << format_rational(p.prob(entry.action.i)) << ")";
    } else {
      out << " terminal";
    }
    out << " W=" << format_rational(value) << "\n";
  }

  void emit(const GmdpState& s, int depth, const std::string& edge) {
    const bool terminal = !s.initial() && is_terminal(s, inst);
    const Rat value = policy_value(policy, s);
    line(depth, edge, s, false, value);
    if (terminal) return;

    if (s.initial()) return;  // the root's children are emitted by export_policy_tree

    const PolicyEntry& entry = policy.at(s);
    const Portfolio p = pair_portfolio(entry.action.i, entry.action.r, s.alpha, inst);
    for (const auto& [arm, arm_prob] : p.entries) {
      const RewardPmf& pmf = inst.arms[static_cast<std::size_t>(arm)];
      const GmdpState below = state_after(s, arm, s.alpha);
      const Rat mass_below = pmf.cdf(s.alpha);
      if (mass_below > 0) {
        emit(below, depth + 1,
             "arm=a" + std::to_string(arm + 1) + " R<=" + std::to_string(s.alpha) +
                 " p=" + format_rational(arm_prob * mass_below));
      }
      const Rat mass_above = 1 - mass_below;
      if (mass_above > 0) {
        // Aggregated leaf: conditional expected terminal reward given the
        // explored arm exceeded alpha.
        Rat cond(0);
        for (int c = s.alpha + 1; c <= pmf.support_max(); ++c) {
          if (pmf.prob(c) == 0) continue;
          cond += pmf.prob(c) * terminal_reward(state_after(s, arm, c), inst);
        }
        cond /= mass_above;
        GmdpState marker = state_after(s, arm, s.alpha);
        marker.beta = -2;
        out << std::string(static_cast<std::size_t>(depth + 1) * 2, ' ') << "["
            << "arm=a" << arm + 1 << " R>" << s.alpha
            << " p=" << format_rational(arm_prob * mass_above) << "] "
            << "U=" << bits_of(marker.unobserved, inst.num_arms)
            << " alpha=" << s.alpha << " beta=* terminal W=" << format_rational(cond)
            << "\n";
      }
    }
  }
};

}  // namespace

std::string export_policy_tree(const Policy& policy, std::optional<int> branch_r1) {
  const Instance& inst = *policy.instance;
  Exporter exporter{policy, inst, {}};
  const GmdpState s0 = initial_state(inst);
  exporter.emit(s0, 0, "");

  const RewardPmf& first = inst.arms[0];
  if (branch_r1 && (*branch_r1 < 0 || *branch_r1 > inst.max_reward ||
                    first.prob(*branch_r1) == 0)) {
    throw InputError("branch value outside the default arm's support");
  }
  for (int c = first.support_min(); c <= first.support_max(); ++c) {
    if (first.prob(c) == 0) continue;
    if (branch_r1 && c != *branch_r1) continue;
    const GmdpState s1 = state_after(s0, 0, c);
    exporter.emit(s1, 1,
                  "arm=a1 R=" + std::to_string(c) + " p=" + format_rational(first.prob(c)));
  }
  return exporter.out.str();
}

namespace {

std::string take_field(const std::string& text, const std::string& key) {
  const auto at = text.find(key);
  if (at == std::string::npos) throw InputError("tree line misses " + key);
  const auto start = at + key.size();
  auto end = start;
  while (end < text.size() && text[end] != ' ' && text[end] != ']') ++end;
  return text.substr(start, end - start);
}

}  // namespace

std::vector<TreeNode> parse_policy_tree(const std::string& text) {
  std::vector<TreeNode> nodes;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    if (raw.empty()) continue;
    TreeNode node;
    std::size_t indent = 0;
    while (indent < raw.size() && raw[indent] == ' ') ++indent;
    node.depth = static_cast<int>(indent / 2);
    std::string line = raw.substr(indent);

    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw InputError("unterminated tree edge");
      const std::string edge_text = line.substr(1, close - 1);
      TreeEdge edge;
      const std::string arm_text = take_field(edge_text, "arm=a");
      edge.arm = std::stoi(arm_text) - 1;
      edge.prob = parse_rational(take_field(edge_text, "p="));
      if (edge_text.find("R<=") != std::string::npos) {
        edge.kind = '<';
        edge.value = std::stoi(take_field(edge_text, "R<="));
      } else if (edge_text.find("R>") != std::string::npos) {
        edge.kind = '>';
        edge.value = std::stoi(take_field(edge_text, "R>"));
      } else {
        edge.kind = '=';
        edge.value = std::stoi(take_field(edge_text, "R="));
      }
      node.edge = edge;
      line = line.substr(close + 1);
      while (!line.empty() && line.front() == ' ') line = line.substr(1);
    }

    const std::string bits = take_field(line, "U=");
    node.state.unobserved = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1') node.state.unobserved |= (1u << i);
    }
    const std::string alpha = take_field(line, "alpha=");
    node.state.alpha = alpha == "-" ? -1 : std::stoi(alpha);
    const std::string beta = take_field(line, "beta=");
    node.state.beta = beta == "-" ? -1 : (beta == "*" ? -2 : std::stoi(beta));
    node.value = parse_rational(take_field(line, "W="));
    if (line.find(" terminal ") != std::string::npos) {
      node.terminal = true;
    } else {
      const std::string action = take_field(line, "action=p_{");
      const auto comma = action.find(',');
      const auto paren = action.find('(');
      if (comma == std::string::npos || paren == std::string::npos) {
        throw InputError("bad action field: " + action);
      }
      node.action = ActionPair{std::stoi(action.substr(0, comma)) - 1,
                               std::stoi(action.substr(comma + 1, paren - comma - 1)) - 1};
    }
    nodes.push_back(std::move(node));
  }
  return nodes;
}

}  // namespace fidex
