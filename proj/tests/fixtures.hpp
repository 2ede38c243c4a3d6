#pragma once

// Synthetic ranking data shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "karmarank/common.hpp"
#include "karmarank/ranker.hpp"
#include "karmarank/semantics.hpp"

namespace fixture {

inline const std::vector<std::string>& group_names() {
  static const std::vector<std::string> g{"GT", "AR", "INFO", "LEX", "RESP", "REL", "MOOD", "COMM"};
  return g;
}

inline karmarank::FeatureSchema grouped_schema(int groups, int per_group) {
  karmarank::FeatureSchema s;
  for (int g = 0; g < groups; ++g)
    for (int f = 0; f < per_group; ++f) {
      s.names.push_back(group_names()[static_cast<std::size_t>(g)] + ":f" + std::to_string(f));
      s.groups.push_back(group_names()[static_cast<std::size_t>(g)]);
    }
  return s;
}

using KarmaFn = std::function<double(const Eigen::VectorXd&, karmarank::Rng&)>;

// Lists of `length` members with standard normal features; karma from `karma`.
inline karmarank::RankingData ranking_data(const karmarank::FeatureSchema& schema, int n_lists, int length,
                                           const KarmaFn& karma, std::uint64_t seed,
                                           const std::string& prefix = "l") {
  karmarank::Rng rng(seed);
  karmarank::RankingData data;
  data.schema = schema;
  const auto d = static_cast<Eigen::Index>(schema.size());
  for (int i = 0; i < n_lists; ++i) {
    karmarank::RankingList l;
    l.id = prefix + std::to_string(i);
    l.thread_id = l.id;
    l.features.resize(length, d);
    for (int m = 0; m < length; ++m) {
      for (Eigen::Index c = 0; c < d; ++c) l.features(m, c) = rng.normal();
      l.member_ids.push_back(l.id + "_" + std::to_string(m));
      l.created_utc.push_back(m);
      l.karma.push_back(karma(l.features.row(m).transpose(), rng));
    }
    data.lists.push_back(std::move(l));
  }
  return data;
}

// One group whose first feature is the member's karma rank, the rest noise.
inline karmarank::RankingData planted_group_data(int n_lists, int planted_group, std::uint64_t seed,
                                                 const std::string& prefix = "l") {
  const auto schema = grouped_schema(8, 3);
  const Eigen::Index col = planted_group * 3;
  auto data = ranking_data(schema, n_lists, 10, [](const Eigen::VectorXd&, karmarank::Rng&) { return 0.0; }, seed,
                           prefix);
  karmarank::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& l : data.lists) {
    std::vector<double> ranks(10);
    for (int m = 0; m < 10; ++m) ranks[static_cast<std::size_t>(m)] = m;
    rng.shuffle(ranks);
    for (int m = 0; m < 10; ++m) {
      l.karma[static_cast<std::size_t>(m)] = ranks[static_cast<std::size_t>(m)];
      l.features(m, col) = (ranks[static_cast<std::size_t>(m)] - 4.5) / 2.87;
    }
  }
  return data;
}

// Words "pos<i>" sit at x0 >= 0.5, words "neg<i>" at x0 <= -0.5; the other
// coordinates are uniform noise.
inline karmarank::EmbeddingTable planted_embeddings(int per_side, int dim, std::uint64_t seed) {
  karmarank::Rng rng(seed);
  karmarank::EmbeddingTable t;
  t.vectors.resize(2 * per_side, dim);
  for (int side = 0; side < 2; ++side)
    for (int i = 0; i < per_side; ++i) {
      const auto row = static_cast<Eigen::Index>(side * per_side + i);
      const std::string w = (side == 0 ? "pos" : "neg") + std::to_string(i);
      t.index.emplace(w, t.vocab.size());
      t.vocab.push_back(w);
      for (int c = 1; c < dim; ++c) t.vectors(row, c) = static_cast<float>(rng.uniform(-1.0, 1.0));
      const double x0 = 0.5 + rng.uniform();
      t.vectors(row, 0) = static_cast<float>(side == 0 ? x0 : -x0);
    }
  return t;
}

}  // namespace fixture
