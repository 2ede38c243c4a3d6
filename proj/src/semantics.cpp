#include "karmarank/semantics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace karmarank {

namespace {

float sigmoid(float x) {
  if (x > 30.0f) return 1.0f;
  if (x < -30.0f) return 0.0f;
  return 1.0f / (1.0f + std::exp(-x));
}

std::string format_float(float v) {
  if (v == 0.0f) return "0";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail_data("bad number '" + s + "' in model file");
  return v;
}

// "key value" header line.
std::string expect_key(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) fail_data("model file truncated before '" + key + "'");
  auto sp = line.find(' ');
  if (line.substr(0, sp) != key) fail_data("expected '" + key + "' in model file, got '" + line + "'");
  return sp == std::string::npos ? std::string{} : line.substr(sp + 1);
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(parse_number<double>(tok));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(' ');
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string corpus_hash(const std::vector<std::vector<std::string>>& docs) {
  Fnv1a h;
  for (const auto& d : docs) {
    for (const auto& t : d) {
      h.update(t);
      h.update(std::string_view("\x1f", 1));
    }
    h.update(std::string_view("\x1e", 1));
  }
  return h.hex();
}

Eigen::VectorXd EmbeddingTable::vector(const std::string& token) const {
  return vectors.row(static_cast<Eigen::Index>(index.at(token))).transpose().cast<double>();
}

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "karmarank-embeddings 1\n"
      << "dim " << dim() << "\nwindow " << config.window << "\nnegatives " << config.negatives
      << "\nepochs " << config.epochs << "\nmin_count " << config.min_count << "\nalpha "
      << format_double(config.alpha) << "\nseed " << config.seed << "\nnormalize "
      << (config.normalize_before_average ? 1 : 0) << "\ncorpus_hash " << corpus_hash << "\nvocab "
      << vocab.size() << "\nepoch_loss " << join_doubles(epoch_loss) << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab[i];
    for (Eigen::Index k = 0; k < vectors.cols(); ++k)
      out << ' ' << format_float(vectors(static_cast<Eigen::Index>(i), k));
    out << '\n';
  }
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "karmarank-embeddings 1") fail_data("unsupported embedding file " + path);
  EmbeddingTable t;
  const int dim = parse_number<int>(expect_key(in, "dim"));
  t.config.dim = dim;
  t.config.window = parse_number<int>(expect_key(in, "window"));
  t.config.negatives = parse_number<int>(expect_key(in, "negatives"));
  t.config.epochs = parse_number<int>(expect_key(in, "epochs"));
  t.config.min_count = parse_number<int>(expect_key(in, "min_count"));
  t.config.alpha = parse_number<double>(expect_key(in, "alpha"));
  t.config.seed = parse_number<std::uint64_t>(expect_key(in, "seed"));
  t.config.normalize_before_average = expect_key(in, "normalize") == "1";
  t.corpus_hash = expect_key(in, "corpus_hash");
  const auto n = parse_number<std::size_t>(expect_key(in, "vocab"));
  t.epoch_loss = parse_doubles(expect_key(in, "epoch_loss"));
  t.vectors.resize(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) fail_data("embedding file truncated: " + path);
    std::istringstream is(line);
    std::string word, tok;
    is >> word;
    for (int k = 0; k < dim; ++k) {
      if (!(is >> tok)) fail_data("short embedding row for '" + word + "'");
      t.vectors(static_cast<Eigen::Index>(i), k) = parse_number<float>(tok);
    }
    t.index.emplace(word, i);
    t.vocab.push_back(std::move(word));
  }
  return t;
}

EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipGramConfig& cfg) {
  if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 0 || cfg.epochs < 1)
    fail_config("invalid skip-gram configuration");
  std::size_t raw_tokens = 0;
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : sentences)
    for (const auto& t : s) {
      ++counts[t];
      ++raw_tokens;
    }
  if (raw_tokens == 0) fail_data("skip-gram training corpus is empty");

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [w, c] : counts)
    if (c >= static_cast<std::uint64_t>(std::max(cfg.min_count, 1))) kept.emplace_back(w, c);
  if (kept.empty()) fail_data("no token reaches min_count " + std::to_string(cfg.min_count));
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  EmbeddingTable table;
  table.config = cfg;
  table.corpus_hash = corpus_hash(sentences);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    table.vocab.push_back(kept[i].first);
    table.index.emplace(kept[i].first, i);
  }
  const auto V = static_cast<Eigen::Index>(kept.size());

  std::vector<std::vector<int>> corpus;
  std::size_t train_words = 0;
  for (const auto& s : sentences) {
    std::vector<int> ids;
    for (const auto& t : s)
      if (auto it = table.index.find(t); it != table.index.end()) ids.push_back(static_cast<int>(it->second));
    train_words += ids.size();
    if (ids.size() > 1) corpus.push_back(std::move(ids));
  }

  // Unigram^0.75 noise distribution.
  std::vector<double> cumulative(kept.size());
  double acc = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    acc += std::pow(static_cast<double>(kept[i].second), 0.75);
    cumulative[i] = acc;
  }
  for (auto& c : cumulative) c /= acc;

  Rng rng(derive_seed(cfg.seed, "skipgram"));
  EmbeddingTable::Matrix input(V, cfg.dim);
  EmbeddingTable::Matrix output = EmbeddingTable::Matrix::Zero(V, cfg.dim);
  for (Eigen::Index i = 0; i < input.size(); ++i)
    input.data()[i] = static_cast<float>((rng.uniform() - 0.5) / cfg.dim);

  Eigen::VectorXf grad(cfg.dim);
  const double total = static_cast<double>(cfg.epochs) * static_cast<double>(train_words) + 1.0;
  double processed = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0;
    std::size_t pairs = 0;
    for (const auto& sent : corpus) {
      const auto n = static_cast<int>(sent.size());
      for (int pos = 0; pos < n; ++pos) {
        const float alpha =
            static_cast<float>(cfg.alpha * std::max(1e-4, 1.0 - processed / total));
        processed += 1;
        const int shrink = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.window)));
        const int span = cfg.window - shrink;
        const int center = sent[static_cast<std::size_t>(pos)];
        for (int c = std::max(0, pos - span); c <= std::min(n - 1, pos + span); ++c) {
          if (c == pos) continue;
          const int context = sent[static_cast<std::size_t>(c)];
          auto u = input.row(center);
          grad.setZero();
          for (int d = 0; d <= cfg.negatives; ++d) {
            int target;
            float label;
            if (d == 0) {
              target = context;
              label = 1.0f;
            } else {
              const double r = rng.uniform();
              target = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), r) -
                                        cumulative.begin());
              target = std::min<int>(target, static_cast<int>(V) - 1);
              if (target == context) continue;
              label = 0.0f;
            }
            auto v = output.row(target);
            const float f = sigmoid(u.dot(v));
            const float p = label > 0 ? f : 1.0f - f;
            loss -= std::log(std::max(p, 1e-7f));
            const float g = (label - f) * alpha;
            grad += g * v.transpose();
            v += g * u;
          }
          u += grad.transpose();
          ++pairs;
        }
      }
    }
    const double mean_loss = pairs ? loss / static_cast<double>(pairs) : 0.0;
    if (!std::isfinite(mean_loss)) fail_numeric("skip-gram loss became non-finite");
    table.epoch_loss.push_back(mean_loss);
  }
  table.vectors = std::move(input);
  return table;
}

DocVector embed_doc(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  DocVector out;
  out.vector = Eigen::VectorXd::Zero(table.dim());
  for (const auto& t : tokens) {
    auto it = table.index.find(t);
    if (it == table.index.end()) continue;
    Eigen::VectorXd v = table.vectors.row(static_cast<Eigen::Index>(it->second)).transpose().cast<double>();
    if (table.config.normalize_before_average) {
      const double n = v.norm();
      if (n > 0) v /= n;
    }
    out.vector += v;
    ++out.hits;
  }
  if (out.hits) out.vector /= static_cast<double>(out.hits);
  return out;
}

TfidfMatrix build_tfidf(const std::vector<std::vector<std::string>>& docs, int min_df) {
  std::map<std::string, int> df;
  for (const auto& d : docs) {
    std::set<std::string> uniq(d.begin(), d.end());
    for (const auto& t : uniq) ++df[t];
  }
  TfidfMatrix m;
  std::unordered_map<std::string, Eigen::Index> index;
  std::vector<double> idf;
  const double N = static_cast<double>(docs.size());
  for (const auto& [t, c] : df) {
    if (c < min_df) continue;
    index.emplace(t, static_cast<Eigen::Index>(m.vocab.size()));
    m.vocab.push_back(t);
    idf.push_back(std::log((1.0 + N) / (1.0 + c)) + 1.0);
  }
  m.idf = Eigen::Map<Eigen::VectorXd>(idf.data(), static_cast<Eigen::Index>(idf.size()));

  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < docs.size(); ++r) {
    std::map<Eigen::Index, double> tf;
    for (const auto& t : docs[r])
      if (auto it = index.find(t); it != index.end()) tf[it->second] += 1.0;
    double norm2 = 0;
    for (auto& [c, v] : tf) {
      v *= m.idf(c);
      norm2 += v * v;
    }
    const double inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
    for (const auto& [c, v] : tf) triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v * inv);
  }
  m.matrix.resize(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(m.vocab.size()));
  m.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

void NmfModel::finalize() {
  index.clear();
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], static_cast<Eigen::Index>(i));
  HHt = H * H.transpose();
}

Eigen::SparseVector<double> NmfModel::tfidf(const std::vector<std::string>& tokens) const {
  std::map<Eigen::Index, double> tf;
  for (const auto& t : tokens)
    if (auto it = index.find(t); it != index.end()) tf[it->second] += 1.0;
  Eigen::SparseVector<double> v(static_cast<Eigen::Index>(vocab.size()));
  double norm2 = 0;
  for (auto& [c, x] : tf) {
    x *= idf(c);
    norm2 += x * x;
  }
  const double inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
  for (const auto& [c, x] : tf) v.insert(c) = x * inv;
  return v;
}

DocVector NmfModel::project_doc(const std::vector<std::string>& tokens) const {
  DocVector out;
  const Eigen::SparseVector<double> v = tfidf(tokens);
  out.hits = static_cast<std::size_t>(v.nonZeros());
  if (out.hits == 0) {
    out.vector = Eigen::VectorXd::Zero(rank());
    return out;
  }
  const Eigen::VectorXd dense = Eigen::VectorXd(v);
  out.vector = nmf_fold_in<double>(dense, H, HHt, config.fold_in_iterations);
  return out;
}

void NmfModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "karmarank-nmf 1\n"
      << "rank " << rank() << "\niterations " << config.iterations << "\nfold_in_iterations "
      << config.fold_in_iterations << "\nmin_df " << config.min_df << "\nseed " << config.seed
      << "\ncorpus_hash " << corpus_hash << "\nvocab " << vocab.size() << "\nobjective "
      << join_doubles(objective) << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    out << vocab[i] << '\t' << format_double(idf(c));
    for (Eigen::Index k = 0; k < H.rows(); ++k) out << '\t' << format_double(H(k, c));
    out << '\n';
  }
}

NmfModel NmfModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "karmarank-nmf 1") fail_data("unsupported NMF file " + path);
  NmfModel m;
  const int rank = parse_number<int>(expect_key(in, "rank"));
  m.config.rank = rank;
  m.config.iterations = parse_number<int>(expect_key(in, "iterations"));
  m.config.fold_in_iterations = parse_number<int>(expect_key(in, "fold_in_iterations"));
  m.config.min_df = parse_number<int>(expect_key(in, "min_df"));
  m.config.seed = parse_number<std::uint64_t>(expect_key(in, "seed"));
  m.corpus_hash = expect_key(in, "corpus_hash");
  const auto n = parse_number<std::size_t>(expect_key(in, "vocab"));
  m.objective = parse_doubles(expect_key(in, "objective"));
  m.idf.resize(static_cast<Eigen::Index>(n));
  m.H.resize(rank, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) fail_data("NMF file truncated: " + path);
    auto fields = split(line, '\t');
    if (fields.size() != static_cast<std::size_t>(rank) + 2) fail_data("bad NMF row in " + path);
    const auto c = static_cast<Eigen::Index>(i);
    m.vocab.push_back(fields[0]);
    m.idf(c) = parse_number<double>(fields[1]);
    for (int k = 0; k < rank; ++k) m.H(k, c) = parse_number<double>(fields[static_cast<std::size_t>(k) + 2]);
  }
  m.finalize();
  return m;
}

NmfTraining train_nmf(const TfidfMatrix& tfidf, const NmfConfig& config) {
  NmfOptions<double> opt;
  opt.rank = config.rank;
  opt.iterations = config.iterations;
  opt.seed = config.seed;
  auto factors = nmf_multiplicative<double>(tfidf.matrix, opt);
  NmfTraining out;
  out.model.vocab = tfidf.vocab;
  out.model.idf = tfidf.idf;
  out.model.H = std::move(factors.H);
  out.model.config = config;
  out.model.objective.assign(factors.objective.begin(), factors.objective.end());
  out.model.finalize();
  out.W = std::move(factors.W);
  return out;
}

NmfTraining train_nmf(const std::vector<std::vector<std::string>>& docs, const NmfConfig& config) {
  auto out = train_nmf(build_tfidf(docs, config.min_df), config);
  out.model.corpus_hash = corpus_hash(docs);
  return out;
}

}  // namespace karmarank
