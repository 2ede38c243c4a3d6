#include "karmarank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "karmarank/common.hpp"

namespace karmarank {

int p_at_1(std::span<const std::size_t> order, std::span<const double> karma) {
  if (order.empty() || karma.empty()) fail_data("P@1 of an empty list");
  if (order.size() != karma.size()) fail_data("P@1: order and karma lengths differ");
  const double best = *std::max_element(karma.begin(), karma.end());
  return karma[order.front()] == best ? 1 : 0;
}

GainKind parse_gain(const std::string& name) {
  if (name == "linear") return GainKind::Linear;
  if (name == "exponential") return GainKind::Exponential;
  fail_config("unknown gain function '" + name + "' (expected linear or exponential)");
}

const char* gain_name(GainKind g) { return g == GainKind::Linear ? "linear" : "exponential"; }

double gain_value(GainKind kind, double karma) {
  const double k = std::max(karma, 0.0);
  if (kind == GainKind::Linear) return k;
  return std::exp2(std::min(k, 1000.0)) - 1.0;
}

double ndcg(std::span<const std::size_t> order, std::span<const double> karma, const GainFn& gain) {
  if (karma.empty()) fail_data("NDCG of an empty list");
  if (order.size() != karma.size()) fail_data("NDCG: order and karma lengths differ");
  std::vector<double> gains(karma.size());
  for (std::size_t i = 0; i < karma.size(); ++i) {
    gains[i] = gain(karma[i]);
    if (!(gains[i] >= 0)) fail_numeric("NDCG gain must be non-negative");
  }
  double dcg = 0;
  for (std::size_t i = 0; i < order.size(); ++i) dcg += gains[order[i]] / std::log2(static_cast<double>(i) + 2.0);
  std::vector<double> ideal = gains;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0;
  for (std::size_t i = 0; i < ideal.size(); ++i) idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  if (idcg == 0) return 1.0;
  return std::min(dcg / idcg, 1.0);
}

double ndcg(std::span<const std::size_t> order, std::span<const double> karma, GainKind kind) {
  return ndcg(order, karma, [kind](double k) { return gain_value(kind, k); });
}

PairCount pairwise_agreement(std::span<const double> scores, std::span<const double> karma) {
  PairCount pc;
  for (std::size_t i = 0; i < karma.size(); ++i)
    for (std::size_t j = i + 1; j < karma.size(); ++j) {
      if (karma[i] == karma[j]) continue;
      ++pc.total;
      const double ds = scores[i] - scores[j];
      const double dk = karma[i] - karma[j];
      if (ds == 0)
        pc.correct += 0.5;
      else if ((ds > 0) == (dk > 0))
        pc.correct += 1.0;
    }
  return pc;
}

BaselineScores random_baseline(const std::vector<std::vector<double>>& list_karmas, int repetitions,
                               std::uint64_t seed, GainKind gain) {
  BaselineScores out;
  if (list_karmas.empty() || repetitions < 1) return out;
  Rng rng(derive_seed(seed, "baseline"));
  double p = 0, n = 0;
  for (int r = 0; r < repetitions; ++r) {
    for (const auto& k : list_karmas) {
      Order order(k.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      p += p_at_1(order, k);
      n += ndcg(order, k, gain);
    }
  }
  const double denom = static_cast<double>(repetitions) * static_cast<double>(list_karmas.size());
  out.p_at_1 = p / denom;
  out.ndcg = n / denom;
  return out;
}

}  // namespace karmarank
