#pragma once

#include <memory>
#include <queue>
#include <vector>

#include "fidex/instance.hpp"
#include "fidex/mechanisms.hpp"

namespace fidex::testing {

inline std::vector<BigInt> weights(std::initializer_list<long long> w) {
  std::vector<BigInt> out;
  for (long long v : w) out.emplace_back(v);
  return out;
}

inline std::vector<BigInt> uniform_weights(int h, int top) {
  std::vector<BigInt> w(static_cast<std::size_t>(h) + 1, BigInt(0));
  for (int c = 0; c <= top; ++c) w[static_cast<std::size_t>(c)] = 1;
  return w;
}

/// K=2, H=1: Pr(X1=1)=3/5, Pr(X2=1)=1/2. W(pi*, s0) = 4/5.
inline std::shared_ptr<const Instance> toy_k2h1() {
  return std::make_shared<const Instance>(
      make_instance(1, {{"a1", weights({2, 3})}, {"a2", weights({1, 1})}}));
}

/// K=2, H=2: X1 uniform {0,1,2}; X2 = 2 w.p. 2/5 else 0. W(pi*, s0) = 19/15.
inline std::shared_ptr<const Instance> toy_k2h2() {
  return std::make_shared<const Instance>(
      make_instance(2, {{"a1", weights({1, 1, 1})}, {"a2", weights({3, 0, 2})}}));
}

/// K=3, H=30: nested uniforms with means 15, 10, 5.
inline std::shared_ptr<const Instance> nested_k3h30() {
  return std::make_shared<const Instance>(make_instance(
      30, {{"a1", uniform_weights(30, 30)},
           {"a2", uniform_weights(30, 20)},
           {"a3", uniform_weights(30, 10)}}));
}

/// K=4, H=40: nested uniforms with means 20, 15, 10, 5.
inline std::shared_ptr<const Instance> nested_k4h40() {
  return std::make_shared<const Instance>(make_instance(
      40, {{"a1", uniform_weights(40, 40)},
           {"a2", uniform_weights(40, 30)},
           {"a3", uniform_weights(40, 20)},
           {"a4", uniform_weights(40, 10)}}));
}

/// Replays a scripted sequence of draw outcomes; entries are indices into
/// the distribution passed to draw(). Draws with a single positive outcome
/// do not consume script entries (mirroring the stream source).
class ScriptedSource : public RandomSource {
 public:
  explicit ScriptedSource(std::vector<std::size_t> script)
      : script_(std::move(script)) {}

  std::size_t draw(const std::vector<Rat>& probs) override {
    std::size_t positive = 0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0) {
        ++positive;
        last = i;
      }
    }
    if (positive <= 1) return last;
    if (pos_ >= script_.size()) throw InputError("scripted source exhausted");
    const std::size_t idx = script_[pos_++];
    if (idx >= probs.size() || probs[idx] == 0) {
      throw InputError("scripted draw picks a zero-probability outcome");
    }
    return idx;
  }

 private:
  std::vector<std::size_t> script_;
  std::size_t pos_ = 0;
};

}  // namespace fidex::testing
