#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace karmarank {

// Predicted order: member indices, best first.
using Order = std::vector<std::size_t>;

// 1 iff the predicted top member has the (tie-inclusive) maximum gold karma.
int p_at_1(std::span<const std::size_t> order, std::span<const double> karma);

enum class GainKind { Linear, Exponential };
GainKind parse_gain(const std::string& name);
const char* gain_name(GainKind g);

using GainFn = std::function<double(double)>;

// max(k, 0) for Linear; 2^max(k, 0) - 1 for Exponential.
double gain_value(GainKind kind, double karma);

// Full-list NDCG with log2(i + 1) discounts; 1 when the ideal DCG is 0.
double ndcg(std::span<const std::size_t> order, std::span<const double> karma, const GainFn& gain);
double ndcg(std::span<const std::size_t> order, std::span<const double> karma,
            GainKind kind = GainKind::Linear);

struct PairCount {
  double correct = 0;  // score ties count one half
  std::size_t total = 0;
  double accuracy() const { return total ? correct / static_cast<double>(total) : 0.0; }
  PairCount& operator+=(const PairCount& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
};

// Over all pairs with distinct karma, fraction ordered correctly by score.
PairCount pairwise_agreement(std::span<const double> scores, std::span<const double> karma);

struct BaselineScores {
  double p_at_1 = 0;
  double ndcg = 0;
};

// Uniform shuffles per list, averaged over repetitions.
BaselineScores random_baseline(const std::vector<std::vector<double>>& list_karmas, int repetitions,
                               std::uint64_t seed, GainKind gain = GainKind::Linear);

}  // namespace karmarank
