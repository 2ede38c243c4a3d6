#include "karmarank/lexicons.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "karmarank/common.hpp"
#include "karmarank/ranker.hpp"

namespace karmarank {

using nlohmann::json;

double WordList::hit_rate(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : tokens) hits += contains(t);
  return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

void WordList::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "# karmarank-wordlist 1 " << name << '\n';
  for (const auto& w : expanded) {
    auto it = margin.find(w);
    out << w << '\t' << format_double(it == margin.end() ? 0.0 : it->second) << '\t'
        << (seeds.count(w) ? "seed" : "added") << '\n';
  }
}

WordList WordList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  std::string line;
  WordList wl;
  if (!std::getline(in, line) || line.rfind("# karmarank-wordlist 1", 0) != 0)
    fail_data("not a word list file: " + path);
  wl.name = trim(line.substr(std::string("# karmarank-wordlist 1").size()));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) fail_data("bad word list line in " + path + ": " + line);
    wl.expanded.insert(f[0]);
    wl.margin[f[0]] = std::stod(f[1]);
    if (f[2] == "seed") wl.seeds.insert(f[0]);
  }
  return wl;
}

WordList expand_wordlist(const std::string& name, const std::vector<std::string>& seed_pos,
                         const std::vector<std::string>& seed_neg, const EmbeddingTable& table,
                         const ExpansionOptions& opt) {
  WordList wl;
  wl.name = name;
  std::set<std::string> pos, neg;
  for (const auto& w : seed_pos) {
    if (table.contains(w))
      pos.insert(w);
    else
      wl.dropped_seeds.push_back(w);
  }
  for (const auto& w : seed_neg)
    if (table.contains(w) && !pos.count(w)) neg.insert(w);
  if (!wl.dropped_seeds.empty())
    std::cerr << "warning: word list " << name << ": " << wl.dropped_seeds.size()
              << " seed(s) missing from the embedding vocabulary were dropped\n";
  if (pos.size() < opt.min_seeds || neg.size() < opt.min_seeds)
    fail_data("word list " + name + " needs at least " + std::to_string(opt.min_seeds) +
              " usable seeds per side (have " + std::to_string(pos.size()) + " positive, " +
              std::to_string(neg.size()) + " negative)");

  Eigen::MatrixXd X(static_cast<Eigen::Index>(pos.size() + neg.size()), table.dim());
  std::vector<double> y;
  Eigen::Index r = 0;
  for (const auto* side : {&pos, &neg})
    for (const auto& w : *side) {
      X.row(r++) = table.vector(w).transpose();
      y.push_back(side == &pos ? 1.0 : -1.0);
    }
  SvmOptions so;
  so.C = opt.C;
  so.epochs = opt.epochs;
  so.seed = opt.seed;
  so.fit_bias = true;
  const LinearSvm svm = train_hinge_sgd(X, y, so);
  const double norm = svm.weights.norm();
  if (!(norm > 0)) fail_numeric("word list " + name + ": seed classifier has zero weight vector");

  const Eigen::VectorXd scores =
      (table.vectors.cast<double>() * svm.weights).array() / norm + svm.bias / norm;
  std::vector<std::pair<double, std::string>> ranked;
  for (std::size_t i = 0; i < table.vocab.size(); ++i) {
    const auto& w = table.vocab[i];
    const double m = scores(static_cast<Eigen::Index>(i));
    wl.margin[w] = m;
    if (m > 0 && !pos.count(w) && !neg.count(w)) ranked.emplace_back(m, w);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  wl.seeds = pos;
  wl.expanded = pos;
  for (std::size_t i = 0; i < ranked.size() && i < opt.budget; ++i) wl.expanded.insert(ranked[i].second);
  return wl;
}

double sentence_sentiment(const std::vector<std::string>& tokens, const TextResources& res) {
  double sum = 0;
  int hits = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = res.sentiment.find(tokens[i]);
    if (it == res.sentiment.end()) continue;
    double v = it->second;
    if (i > 0 && res.negators.count(tokens[i - 1])) v = -v;
    sum += v;
    ++hits;
  }
  if (hits == 0) return 0.0;
  return std::clamp(sum / hits, -1.0, 1.0);
}

SentimentSummary comment_sentiment(const TokenizedComment& tc, const TextResources& res) {
  SentimentSummary s;
  const std::size_t n = tc.sentences.size();
  if (n == 0) return s;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = sentence_sentiment(tc.sentence_tokens(i), res);
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(n));
  return s;
}

const char* surrogate_task_name(SurrogateTask t) {
  return t == SurrogateTask::Reply ? "reply" : "response-sentiment";
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<std::size_t> present(const std::vector<std::string>& tokens,
                                 const std::unordered_map<std::string, std::size_t>& index) {
  std::vector<std::size_t> out;
  for (const auto& t : tokens) {
    auto it = index.find(t);
    if (it != index.end()) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double BowClassifier::probability(const std::vector<std::string>& tokens) const {
  const auto idx = present(tokens, index);
  if (idx.empty()) return prior;
  double z = bias;
  for (auto i : idx) z += weights[i];
  return sigmoid(z);
}

void BowClassifier::save(const std::string& path) const {
  json w = json::array();
  for (std::size_t i = 0; i < vocab.size(); ++i) w.push_back({vocab[i], weights[i]});
  json j = {{"format", "karmarank-bow"}, {"version", 1}, {"task", task},
            {"prior", prior},            {"bias", bias}, {"weights", w}};
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << j.dump() << '\n';
}

BowClassifier BowClassifier::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "karmarank-bow" || j.value("version", 0) != 1)
    fail_data("unsupported classifier file " + path);
  BowClassifier c;
  c.task = j.at("task").get<std::string>();
  c.prior = j.at("prior").get<double>();
  c.bias = j.at("bias").get<double>();
  for (const auto& p : j.at("weights")) {
    c.index.emplace(p.at(0).get<std::string>(), c.vocab.size());
    c.vocab.push_back(p.at(0).get<std::string>());
    c.weights.push_back(p.at(1).get<double>());
  }
  return c;
}

BowClassifier train_bow_classifier(const std::string& task, const std::vector<std::vector<std::string>>& docs,
                                   const std::vector<int>& labels, const BowOptions& opt) {
  if (docs.size() != labels.size()) fail_data("classifier " + task + ": documents and labels differ in count");
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos < opt.min_class_examples || n_neg < opt.min_class_examples)
    fail_data("classifier " + task + " needs at least " + std::to_string(opt.min_class_examples) +
              " examples per class (have " + std::to_string(n_pos) + " positive, " + std::to_string(n_neg) +
              " negative)");

  std::map<std::string, int> df;
  for (const auto& d : docs) {
    std::set<std::string> u(d.begin(), d.end());
    for (const auto& t : u) ++df[t];
  }
  BowClassifier c;
  c.task = task;
  for (const auto& [t, n] : df)
    if (n >= opt.min_df) {
      c.index.emplace(t, c.vocab.size());
      c.vocab.push_back(t);
    }
  c.weights.assign(c.vocab.size(), 0.0);
  c.prior = static_cast<double>(n_pos) / static_cast<double>(labels.size());
  c.bias = std::log(c.prior / (1.0 - c.prior));

  std::vector<std::vector<std::size_t>> rows(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) rows[i] = present(docs[i], c.index);

  Rng rng(derive_seed(opt.seed, "optimizer"));
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double eta0 = 0.5;
  double t = 0;
  // Lazy L2 decay: weights are stored divided by `scale`.
  double scale = 1.0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    for (auto i : order) {
      const double eta = eta0 / (1.0 + eta0 * opt.l2 * t);
      double z = c.bias;
      for (auto k : rows[i]) z += scale * c.weights[k];
      const double g = (labels[i] == 1 ? 1.0 : 0.0) - sigmoid(z);
      scale *= 1.0 - eta * opt.l2;
      for (auto k : rows[i]) c.weights[k] += eta * g / scale;
      c.bias += eta * g;
      t += 1;
      if (scale < 1e-100) {
        for (auto& w : c.weights) w *= scale;
        scale = 1.0;
      }
    }
  }
  for (auto& w : c.weights) w *= scale;
  for (double w : c.weights)
    if (!std::isfinite(w)) fail_numeric("classifier " + task + " diverged");
  return c;
}

std::vector<LabeledDoc> surrogate_labels(SurrogateTask task, const Thread& thread, const TextAnalyzer& analyzer) {
  std::unordered_map<std::string, std::vector<std::size_t>> children;
  for (std::size_t i = 0; i < thread.comments.size(); ++i)
    if (thread.comments[i].parent_id) children[*thread.comments[i].parent_id].push_back(i);

  std::vector<LabeledDoc> out;
  for (const auto& c : thread.comments) {
    if (c.is_deleted) continue;
    auto it = children.find(c.id);
    const std::size_t n_replies = it == children.end() ? 0 : it->second.size();
    LabeledDoc d;
    d.comment_id = c.id;
    if (task == SurrogateTask::Reply) {
      d.label = n_replies > 0 ? 1 : 0;
    } else {
      if (n_replies == 0) continue;
      double sum = 0;
      int n = 0;
      for (auto r : it->second) {
        const auto& reply = thread.comments[r];
        if (reply.is_deleted) continue;
        sum += comment_sentiment(analyzer.tokenize(reply.body), analyzer.resources()).mean;
        ++n;
      }
      if (n == 0 || sum == 0) continue;
      d.label = sum > 0 ? 1 : 0;
    }
    d.tokens = analyzer.tokenize(c.body).content_tokens();
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<double> CommunityModel::posterior(const std::vector<std::string>& tokens) const {
  const auto k = classes.size();
  std::vector<double> logp(log_prior);
  for (const auto& t : tokens) {
    auto it = index.find(t);
    if (it == index.end()) continue;
    for (std::size_t c = 0; c < k; ++c)
      logp[c] += log_likelihood(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(it->second));
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double z = 0;
  for (auto& v : logp) z += (v = std::exp(v - mx));
  for (auto& v : logp) v /= z;
  return logp;
}

CommunityModel CommunityModel::from_counts(std::vector<std::string> classes, const std::vector<double>& doc_counts,
                                           std::vector<std::string> vocab, const Eigen::MatrixXd& token_counts,
                                           bool uniform_prior) {
  if (classes.size() < 2) fail_data("community model needs at least 2 subreddits");
  CommunityModel m;
  const auto k = static_cast<Eigen::Index>(classes.size());
  const auto v = static_cast<Eigen::Index>(vocab.size());
  const double total_docs = std::accumulate(doc_counts.begin(), doc_counts.end(), 0.0);
  for (Eigen::Index c = 0; c < k; ++c)
    m.log_prior.push_back(uniform_prior || total_docs == 0
                              ? -std::log(static_cast<double>(k))
                              : std::log(doc_counts[static_cast<std::size_t>(c)] / total_docs));
  m.log_likelihood.resize(k, v);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double denom = token_counts.row(c).sum() + static_cast<double>(v);
    for (Eigen::Index w = 0; w < v; ++w) m.log_likelihood(c, w) = std::log((token_counts(c, w) + 1.0) / denom);
  }
  m.classes = std::move(classes);
  m.vocab = std::move(vocab);
  for (std::size_t i = 0; i < m.vocab.size(); ++i) m.index.emplace(m.vocab[i], i);
  return m;
}

CommunityModel train_community_model(const std::vector<std::vector<std::string>>& docs,
                                     const std::vector<std::string>& subreddits, bool uniform_prior) {
  if (docs.size() != subreddits.size()) fail_data("community model: documents and labels differ in count");
  std::set<std::string> cls(subreddits.begin(), subreddits.end());
  if (cls.size() < 2) fail_data("community model needs at least 2 subreddits, found " + std::to_string(cls.size()));
  std::set<std::string> words;
  for (const auto& d : docs) words.insert(d.begin(), d.end());
  std::vector<std::string> classes(cls.begin(), cls.end()), vocab(words.begin(), words.end());
  std::unordered_map<std::string, Eigen::Index> ci, wi;
  for (std::size_t i = 0; i < classes.size(); ++i) ci[classes[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < vocab.size(); ++i) wi[vocab[i]] = static_cast<Eigen::Index>(i);
  std::vector<double> doc_counts(classes.size(), 0.0);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()),
                                                 static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto c = ci.at(subreddits[d]);
    doc_counts[static_cast<std::size_t>(c)] += 1;
    for (const auto& t : docs[d]) counts(c, wi.at(t)) += 1;
  }
  return CommunityModel::from_counts(std::move(classes), doc_counts, std::move(vocab), counts, uniform_prior);
}

void CommunityModel::save(const std::string& path) const {
  json j = {{"format", "karmarank-community"}, {"version", 1}, {"classes", classes}, {"log_prior", log_prior}};
  json words = json::array();
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    std::vector<double> col(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c)
      col[c] = log_likelihood(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(w));
    words.push_back({vocab[w], col});
  }
  j["log_likelihood"] = std::move(words);
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << j.dump() << '\n';
}

CommunityModel CommunityModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "karmarank-community" || j.value("version", 0) != 1)
    fail_data("unsupported community model file " + path);
  CommunityModel m;
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.log_prior = j.at("log_prior").get<std::vector<double>>();
  const auto& words = j.at("log_likelihood");
  m.log_likelihood.resize(static_cast<Eigen::Index>(m.classes.size()), static_cast<Eigen::Index>(words.size()));
  for (std::size_t w = 0; w < words.size(); ++w) {
    m.vocab.push_back(words[w].at(0).get<std::string>());
    m.index.emplace(m.vocab.back(), w);
    const auto col = words[w].at(1).get<std::vector<double>>();
    for (std::size_t c = 0; c < col.size(); ++c)
      m.log_likelihood(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(w)) = col[c];
  }
  return m;
}

}  // namespace karmarank
