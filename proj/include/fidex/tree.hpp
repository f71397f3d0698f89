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

#include <optional>
#include <string>
#include <vector>

#include "fidex/gmdp.hpp"

namespace fidex {

/// Deterministic indented text rendering of the exploration policy.
///
/// One line per node:
///   [edge] U=<bits> alpha=<a> beta=<b> action=p_{i,r}(<p/q>) W=<p/q>
///   [edge] U=<bits> alpha=<a> beta=<b> terminal W=<p/q>
/// Bits list arms 1..K left to right ('1' = unobserved); arms in actions and
/// edges are 1-based. The root expands one child per value of the default
/// arm's reward (restricted to `branch_r1` when given). Deeper nodes group
/// outcomes of the explored arm into "R<=alpha" (same canonical state) and a
/// single aggregated "R>alpha" leaf (beta printed as '*', W equal to the
/// conditional expected terminal reward).
std::string export_policy_tree(const Policy& policy,
                               std::optional<int> branch_r1 = std::nullopt);

struct TreeEdge {
  int arm = -1;   // 0-based
  char kind = 0;  // '=', '<' (R <= alpha) or '>' (R > alpha)
  int value = 0;
  Rat prob;
};

struct TreeNode {
  int depth = 0;
  std::optional<TreeEdge> edge;  // absent at the root
  GmdpState state;               // beta = -2 marks an aggregated leaf
  bool terminal = false;
  std::optional<ActionPair> action;  // 0-based; present iff !terminal
  Rat value;
};

/// Parses the text produced by export_policy_tree.
std::vector<TreeNode> parse_policy_tree(const std::string& text);

}  // namespace fidex
