#include "karmarank/features.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "karmarank/common.hpp"

namespace karmarank {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> feature_group_order() { return {kFeatureGroups.begin(), kFeatureGroups.end()}; }

bool is_feature_group(const std::string& g) {
  return std::find(kFeatureGroups.begin(), kFeatureGroups.end(), g) != kFeatureGroups.end();
}

namespace {

constexpr double kZeroVariance = 1e-12;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::set<std::string> jaccard_set(const TokenizedComment& tc, const TextResources& res) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < tc.size(); ++i)
    if (tc.kinds[i] == TokenKind::Word || tc.kinds[i] == TokenKind::Number)
      if (!res.stopwords.count(tc.tokens[i])) out.insert(tc.tokens[i]);
  return out;
}

}  // namespace

double NamedVector::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  fail_data("no feature named " + name);
}

std::vector<std::vector<std::string>> topic_corpus(const std::vector<const Thread*>& threads,
                                                   const TextAnalyzer& analyzer) {
  std::vector<std::vector<std::string>> docs;
  for (const auto* t : threads) {
    auto title = analyzer.tokenize(t->title).content_tokens();
    auto body = analyzer.tokenize(t->selftext).content_tokens();
    title.insert(title.end(), body.begin(), body.end());
    if (!title.empty()) docs.push_back(std::move(title));
    for (const auto& c : t->comments) {
      if (c.is_deleted) continue;
      auto toks = analyzer.tokenize(c.body).content_tokens();
      if (!toks.empty()) docs.push_back(std::move(toks));
    }
  }
  return docs;
}

ModelSet train_models(const std::vector<const Thread*>& train_threads, std::shared_ptr<const TextAnalyzer> analyzer,
                      const ModelConfig& config) {
  if (train_threads.empty()) fail_data("no training threads to fit models on");
  ModelSet m(analyzer);
  const TextAnalyzer& a = *analyzer;

  const auto corpus = topic_corpus(train_threads, a);
  m.embeddings = train_skipgram(corpus, config.skipgram);
  m.nmf = train_nmf(corpus, config.nmf).model;

  m.reputation = ReputationTable(train_threads);
  m.flair_slots = config.flair_top_k;
  std::map<std::string, std::map<std::string, std::size_t>> flair_counts;
  std::vector<std::vector<std::string>> comm_docs;
  std::vector<std::string> comm_labels;
  for (const auto* t : train_threads)
    for (const auto& c : t->comments) {
      if (c.is_deleted) continue;
      if (c.flair) ++flair_counts[t->subreddit][*c.flair];
      const auto tc = a.tokenize(c.body);
      m.background.add(tc);
      comm_docs.push_back(tc.content_tokens());
      comm_labels.push_back(t->subreddit);
    }
  for (const auto& [sub, counts] : flair_counts) {
    std::vector<std::pair<std::size_t, std::string>> v;
    for (const auto& [f, n] : counts) v.emplace_back(n, f);
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      return x.second < y.second;
    });
    auto& top = m.top_flairs[sub];
    for (std::size_t i = 0; i < v.size() && i < config.flair_top_k; ++i) top.push_back(v[i].second);
  }

  for (auto task : {SurrogateTask::Reply, SurrogateTask::ResponseSentiment}) {
    std::vector<std::vector<std::string>> docs;
    std::vector<int> labels;
    for (const auto* t : train_threads)
      for (auto& d : surrogate_labels(task, *t, a)) {
        docs.push_back(std::move(d.tokens));
        labels.push_back(d.label);
      }
    auto clf = train_bow_classifier(surrogate_task_name(task), docs, labels, config.bow);
    (task == SurrogateTask::Reply ? m.reply : m.response) = std::move(clf);
  }

  const fs::path seeds = config.seeds_dir;
  const auto polite = read_word_list((seeds / "politeness.txt").string());
  const auto argue = read_word_list((seeds / "argument.txt").string());
  const auto profane = read_word_list((seeds / "profanity.txt").string());
  const auto neutral = read_word_list((seeds / "neutral.txt").string());
  auto negatives = [&](const std::vector<std::string>& a1, const std::vector<std::string>& a2) {
    std::vector<std::string> out = neutral;
    out.insert(out.end(), a1.begin(), a1.end());
    out.insert(out.end(), a2.begin(), a2.end());
    return out;
  };
  m.politeness = expand_wordlist("politeness", polite, negatives(argue, profane), m.embeddings, config.expansion);
  m.argument = expand_wordlist("argument", argue, negatives(polite, profane), m.embeddings, config.expansion);
  m.profanity = expand_wordlist("profanity", profane, negatives(polite, argue), m.embeddings, config.expansion);

  m.community = train_community_model(comm_docs, comm_labels, config.community_uniform_prior);
  return m;
}

void ModelSet::save(const std::string& dir) const {
  fs::create_directories(dir);
  const fs::path d = dir;
  reputation.save((d / "reputation.tsv").string());
  {
    json j = {{"format", "karmarank-flairs"}, {"version", 1}, {"slots", flair_slots}, {"top", top_flairs}};
    std::ofstream out(d / "flairs.json");
    out << j.dump(1) << '\n';
  }
  background.save((d / "ngrams.tsv").string());
  embeddings.save((d / "embeddings.txt").string());
  nmf.save((d / "nmf.txt").string());
  reply.save((d / "reply.json").string());
  response.save((d / "response.json").string());
  politeness.save((d / "politeness.tsv").string());
  argument.save((d / "argument.tsv").string());
  profanity.save((d / "profanity.tsv").string());
  community.save((d / "community.json").string());
}

ModelSet ModelSet::load(const std::string& dir, std::shared_ptr<const TextAnalyzer> analyzer) {
  const fs::path d = dir;
  ModelSet m(std::move(analyzer));
  m.reputation = ReputationTable::load((d / "reputation.tsv").string());
  {
    std::ifstream in(d / "flairs.json");
    if (!in) fail_data("missing " + (d / "flairs.json").string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("format", "") != "karmarank-flairs") fail_data("bad flairs.json in " + dir);
    m.flair_slots = j.at("slots").get<std::size_t>();
    m.top_flairs = j.at("top").get<std::map<std::string, std::vector<std::string>>>();
  }
  m.background = NgramBackground::load((d / "ngrams.tsv").string());
  m.embeddings = EmbeddingTable::load((d / "embeddings.txt").string());
  m.nmf = NmfModel::load((d / "nmf.txt").string());
  m.reply = BowClassifier::load((d / "reply.json").string());
  m.response = BowClassifier::load((d / "response.json").string());
  m.politeness = WordList::load((d / "politeness.tsv").string());
  m.argument = WordList::load((d / "argument.tsv").string());
  m.profanity = WordList::load((d / "profanity.tsv").string());
  m.community = CommunityModel::load((d / "community.json").string());
  return m;
}

Thread history_view(const Thread& thread, std::int64_t cutoff) {
  Thread h;
  h.post_id = thread.post_id;
  h.subreddit = thread.subreddit;
  h.author = thread.author;
  h.title = thread.title;
  h.selftext = thread.selftext;
  h.url = thread.url;
  h.created_utc = thread.created_utc;
  for (const auto& c : thread.comments)
    if (c.created_utc <= cutoff) {
      h.comments.push_back(c);
      h.comments.back().karma = 0;
    }
  h.sort_comments();
  return h;
}

struct FeatureExtractor::PostText {
  std::set<std::string> title_set, body_set;
  DocVector title_emb, body_emb, title_nmf, body_nmf;
};

struct FeatureExtractor::CommentText {
  std::set<std::string> set;
  DocVector emb, nmf;
  Eigen::VectorXd own;  // INFO, LEX, RESP, MOOD, COMM in schema order
};

FeatureExtractor::FeatureExtractor(const ModelSet& models) : models_(models) {
  for (const auto& g : kFeatureGroups) {
    const auto names = group_names(g);
    group_span_[g] = {schema_.size(), names.size()};
    for (const auto& n : names) {
      schema_.names.push_back(g + ":" + n);
      schema_.groups.push_back(g);
    }
  }
}

std::vector<std::string> FeatureExtractor::group_names(const std::string& g) const {
  if (g == "GT")
    return {"secs_since_post",       "secs_since_parent",  "depth",           "thread_index",
            "author_prior_comments", "siblings_at_cutoff", "is_reply_to_root", "replies_at_cutoff"};
  if (g == "AR") {
    std::vector<std::string> n{"k_index", "is_op", "has_flair"};
    for (std::size_t i = 0; i < models_.flair_slots; ++i) {
      std::string idx = std::to_string(i);
      n.push_back("flair_" + std::string(idx.size() < 2 ? 2 - idx.size() : 0, '0') + idx);
    }
    return n;
  }
  if (g == "INFO")
    return {"tokens", "types", "sentences", "mean_sentence_len", "urls", "entities", "unseen_1", "unseen_2",
            "unseen_3"};
  if (g == "LEX") {
    std::vector<std::string> n;
    for (std::size_t p = 0; p < kPunctClassCount; ++p)
      n.push_back(std::string("punct_") + punct_class_name(static_cast<PunctClass>(p)));
    for (std::size_t t = 0; t < kPosTagCount; ++t) n.push_back("pos_" + lower(pos_tag_name(static_cast<PosTag>(t))));
    for (const char* b : {"len_lt10", "len_10_30", "len_30_100", "len_ge100"}) n.push_back(b);
    return n;
  }
  if (g == "RESP") return {"p_reply", "p_positive_response"};
  if (g == "REL")
    return {"nmf_parent", "nmf_post", "nmf_title", "emb_parent", "emb_post",
            "emb_title",  "jac_parent", "jac_post", "jac_title", "is_root"};
  if (g == "MOOD") return {"sent_mean", "sent_std", "politeness", "argument", "profanity"};
  if (g == "COMM") {
    std::vector<std::string> n;
    for (const auto& c : models_.community.classes) n.push_back("p_" + c);
    return n;
  }
  fail_config("unknown feature group '" + g + "'");
}

Eigen::VectorXd FeatureExtractor::gt_features(const Thread& h, std::size_t i) const {
  const Comment& c = h.comments[i];
  Eigen::VectorXd v(8);
  const double since_post = static_cast<double>(c.created_utc - h.created_utc);
  double since_parent = since_post;
  if (c.parent_id)
    if (const Comment* p = h.find(*c.parent_id)) since_parent = static_cast<double>(c.created_utc - p->created_utc);
  std::size_t prior = 0, siblings = 0, replies = 0;
  const bool anon = ReputationTable::is_anonymous(c.author);
  for (std::size_t j = 0; j < h.comments.size(); ++j) {
    const Comment& o = h.comments[j];
    if (j < i && !anon && o.author == c.author) ++prior;
    if (j != i && o.parent_id == c.parent_id) ++siblings;
    if (o.parent_id && *o.parent_id == c.id) ++replies;
  }
  v << since_post, since_parent, h.depth(i), static_cast<double>(i), static_cast<double>(prior),
      static_cast<double>(siblings), c.parent_id ? 0.0 : 1.0, static_cast<double>(replies);
  return v;
}

Eigen::VectorXd FeatureExtractor::ar_features(const Thread& h, std::size_t i) const {
  const Comment& c = h.comments[i];
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 + models_.flair_slots));
  const bool anon = ReputationTable::is_anonymous(c.author);
  if (!anon) {
    v(0) = static_cast<double>(models_.reputation.k_index_excluding(c.author, h.post_id));
    v(1) = c.author == h.author ? 1.0 : 0.0;
  }
  if (c.flair) {
    v(2) = 1.0;
    auto it = models_.top_flairs.find(h.subreddit);
    if (it != models_.top_flairs.end()) {
      auto pos = std::find(it->second.begin(), it->second.end(), *c.flair);
      const auto slot = static_cast<std::size_t>(pos - it->second.begin());
      if (pos != it->second.end() && slot < models_.flair_slots) v(static_cast<Eigen::Index>(3 + slot)) = 1.0;
    }
  }
  return v;
}

const FeatureExtractor::PostText& FeatureExtractor::post_text(const Thread& thread) {
  auto& slot = post_cache_[thread.post_id];
  if (slot) return *slot;
  slot = std::make_shared<PostText>();
  const auto& a = *models_.analyzer;
  const auto title = a.tokenize(thread.title), body = a.tokenize(thread.selftext);
  slot->title_set = jaccard_set(title, a.resources());
  slot->body_set = jaccard_set(body, a.resources());
  const auto tt = title.content_tokens(), bt = body.content_tokens();
  slot->title_emb = embed_doc(tt, models_.embeddings);
  slot->body_emb = embed_doc(bt, models_.embeddings);
  slot->title_nmf = models_.nmf.project_doc(tt);
  slot->body_nmf = models_.nmf.project_doc(bt);
  return *slot;
}

const FeatureExtractor::CommentText& FeatureExtractor::comment_text(const Comment& c) {
  auto& slot = comment_cache_[c.id];
  if (slot) return *slot;
  slot = std::make_shared<CommentText>();
  const auto& a = *models_.analyzer;
  const auto& res = a.resources();
  const TokenizedComment tc = a.tokenize(c.is_deleted ? std::string_view() : std::string_view(c.body));
  const auto content = tc.content_tokens();
  slot->set = jaccard_set(tc, res);
  slot->emb = embed_doc(content, models_.embeddings);
  slot->nmf = models_.nmf.project_doc(content);

  std::vector<double> v;
  // INFO
  std::set<std::string> types(content.begin(), content.end());
  v.push_back(static_cast<double>(content.size()));
  v.push_back(static_cast<double>(types.size()));
  v.push_back(static_cast<double>(tc.sentences.size()));
  v.push_back(tc.sentences.empty() ? 0.0
                                   : static_cast<double>(content.size()) / static_cast<double>(tc.sentences.size()));
  v.push_back(tc.urls);
  v.push_back(a.entity_count(tc));
  for (double u : unseen_fraction(tc, models_.background)) v.push_back(u);
  // LEX
  for (int p : tc.punct_counts) v.push_back(p);
  for (int p : pos_counts(tc)) v.push_back(p);
  const auto n = content.size();
  v.push_back(n < 10);
  v.push_back(n >= 10 && n < 30);
  v.push_back(n >= 30 && n < 100);
  v.push_back(n >= 100);
  // RESP
  v.push_back(models_.reply.probability(content));
  v.push_back(models_.response.probability(content));
  // MOOD
  const auto s = comment_sentiment(tc, res);
  v.push_back(s.mean);
  v.push_back(s.std);
  v.push_back(models_.politeness.hit_rate(content));
  v.push_back(models_.argument.hit_rate(content));
  v.push_back(models_.profanity.hit_rate(content));
  // COMM
  for (double p : models_.community.posterior(content)) v.push_back(p);
  slot->own = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return *slot;
}

Eigen::VectorXd FeatureExtractor::text_features(const Thread& h, std::size_t i) {
  const Comment& c = h.comments[i];
  const CommentText& ct = comment_text(c);
  const PostText& pt = post_text(h);

  // Root-level comments take the post values for the parent target.
  const CommentText* parent = nullptr;
  if (c.parent_id)
    if (const Comment* p = h.find(*c.parent_id)) parent = &comment_text(*p);
  auto cos = [](const DocVector& x, const DocVector& y) {
    return x.flagged() || y.flagged() ? 0.0 : cosine_similarity(x.vector, y.vector);
  };
  Eigen::VectorXd rel(10);
  rel << (parent ? cos(ct.nmf, parent->nmf) : cos(ct.nmf, pt.body_nmf)), cos(ct.nmf, pt.body_nmf),
      cos(ct.nmf, pt.title_nmf), (parent ? cos(ct.emb, parent->emb) : cos(ct.emb, pt.body_emb)),
      cos(ct.emb, pt.body_emb), cos(ct.emb, pt.title_emb),
      (parent ? jaccard_similarity(ct.set, parent->set) : jaccard_similarity(ct.set, pt.body_set)),
      jaccard_similarity(ct.set, pt.body_set), jaccard_similarity(ct.set, pt.title_set), parent ? 0.0 : 1.0;

  const auto info_off = group_span_.at("INFO").first;
  const auto [rel_off, rel_w] = group_span_.at("REL");
  const std::size_t text_w = schema_.size() - info_off;
  Eigen::VectorXd out(static_cast<Eigen::Index>(text_w));
  // own holds INFO..RESP then MOOD, COMM; REL sits between RESP and MOOD.
  const auto before_rel = static_cast<Eigen::Index>(rel_off - info_off);
  out.head(before_rel) = ct.own.head(before_rel);
  out.segment(before_rel, static_cast<Eigen::Index>(rel_w)) = rel;
  out.tail(ct.own.size() - before_rel) = ct.own.tail(ct.own.size() - before_rel);
  return out;
}

Eigen::VectorXd FeatureExtractor::member_row(const Thread& h, std::size_t i) {
  Eigen::VectorXd row(static_cast<Eigen::Index>(schema_.size()));
  const auto gt = gt_features(h, i);
  const auto ar = ar_features(h, i);
  const auto text = text_features(h, i);
  row << gt, ar, text;
  return row;
}

Eigen::MatrixXd FeatureExtractor::list_features(const CommentList& list, const Thread& thread) {
  const Thread h = history_view(thread, list.history_cutoff_utc);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(list.members.size()), static_cast<Eigen::Index>(schema_.size()));
  for (std::size_t m = 0; m < list.members.size(); ++m) {
    const auto i = h.index_of(list.members[m]);
    if (i == h.comments.size())
      fail_data("list " + list.id + " member " + list.members[m] + " is not visible at its history cutoff");
    out.row(static_cast<Eigen::Index>(m)) = member_row(h, i).transpose();
  }
  return out;
}

NamedVector FeatureExtractor::extract_group(const std::string& comment_id, const CommentList& list,
                                            const Thread& thread, const std::string& group) {
  const Thread h = history_view(thread, list.history_cutoff_utc);
  const auto i = h.index_of(comment_id);
  if (i == h.comments.size()) fail_data("comment " + comment_id + " is not visible at the list cutoff");
  auto span = group_span_.find(group);
  if (span == group_span_.end()) fail_config("unknown feature group '" + group + "'");
  const auto [off, width] = span->second;
  Eigen::VectorXd values;
  if (group == "GT") {
    values = gt_features(h, i);
  } else if (group == "AR") {
    values = ar_features(h, i);
  } else {
    const auto text_off = group_span_.at("INFO").first;
    values = text_features(h, i).segment(static_cast<Eigen::Index>(off - text_off), static_cast<Eigen::Index>(width));
  }
  NamedVector nv;
  for (std::size_t k = 0; k < width; ++k) {
    nv.names.push_back(schema_.names[off + k]);
    nv.values.push_back(values(static_cast<Eigen::Index>(k)));
  }
  return nv;
}

RankingData featurize_lists(const std::vector<CommentList>& lists, const CorpusStore& store,
                            FeatureExtractor& extractor) {
  RankingData data;
  data.schema = extractor.schema();
  data.lists.reserve(lists.size());
  for (const auto& l : lists) {
    const Thread* t = store.find_thread(l.thread_id);
    if (!t) fail_data("list " + l.id + " refers to unknown thread " + l.thread_id);
    RankingList r;
    r.id = l.id;
    r.thread_id = l.thread_id;
    r.subreddit = t->subreddit;
    r.member_ids = l.members;
    for (const auto& m : l.members) {
      const Comment* c = t->find(m);
      if (!c) fail_data("list " + l.id + " member " + m + " not in thread");
      r.created_utc.push_back(c->created_utc);
      r.karma.push_back(static_cast<double>(c->karma));
    }
    r.features = extractor.list_features(l, *t);
    data.lists.push_back(std::move(r));
  }
  return data;
}

FeatureSchema Normalizer::output() const {
  FeatureSchema s;
  for (auto c : kept) {
    s.names.push_back(input.names[c]);
    s.groups.push_back(input.groups[c]);
  }
  return s;
}

Normalizer fit_normalizer(const RankingData& train) {
  Normalizer n;
  n.input = train.schema;
  const auto d = static_cast<Eigen::Index>(train.schema.size());
  std::map<std::string, Eigen::VectorXd> sum, sumsq;
  std::map<std::string, double> count;
  for (const auto& l : train.lists) {
    auto& s = sum[l.subreddit];
    auto& q = sumsq[l.subreddit];
    if (s.size() == 0) {
      s = Eigen::VectorXd::Zero(d);
      q = Eigen::VectorXd::Zero(d);
    }
    s += l.features.colwise().sum().transpose();
    count[l.subreddit] += static_cast<double>(l.features.rows());
  }
  std::map<std::string, Eigen::VectorXd> mean, sd;
  for (const auto& [sub, s] : sum) mean[sub] = s / count[sub];
  // Second pass for a numerically stable variance.
  for (const auto& l : train.lists) {
    const auto centered = l.features.rowwise() - mean[l.subreddit].transpose();
    sumsq[l.subreddit] += centered.array().square().colwise().sum().matrix().transpose();
  }
  for (const auto& [sub, q] : sumsq) sd[sub] = (q / count[sub]).cwiseSqrt();

  for (Eigen::Index c = 0; c < d; ++c) {
    bool varies = false;
    for (const auto& [sub, s] : sd) varies = varies || s(c) > kZeroVariance;
    if (varies)
      n.kept.push_back(static_cast<std::size_t>(c));
    else
      n.dropped.push_back(train.schema.names[static_cast<std::size_t>(c)]);
  }
  if (!n.dropped.empty())
    std::cerr << "warning: dropped " << n.dropped.size() << " zero-variance feature(s); see schema.json\n";
  const auto idx = Eigen::Map<const Eigen::Matrix<std::size_t, Eigen::Dynamic, 1>>(
      n.kept.data(), static_cast<Eigen::Index>(n.kept.size()));
  for (const auto& [sub, m] : mean) {
    n.mean[sub] = m(idx);
    Eigen::VectorXd s = sd[sub](idx);
    for (Eigen::Index c = 0; c < s.size(); ++c)
      if (!(s(c) > kZeroVariance)) s(c) = 1.0;
    n.scale[sub] = s;
  }
  return n;
}

RankingData Normalizer::apply(const RankingData& raw) const {
  if (raw.schema.names != input.names) fail_data("feature schema differs from the one the normalizer was fit on");
  RankingData out = raw.select_columns(kept);
  for (auto& l : out.lists) {
    auto m = mean.find(l.subreddit);
    if (m == mean.end()) fail_data("no training statistics for subreddit " + l.subreddit);
    const auto& s = scale.at(l.subreddit);
    l.features = ((l.features.rowwise() - m->second.transpose()).array().rowwise() / s.transpose().array()).matrix();
    if (!l.features.allFinite()) fail_numeric("non-finite feature after normalization in list " + l.id);
  }
  return out;
}

void Normalizer::save(const std::string& path) const {
  json stats = json::object();
  for (const auto& [sub, m] : mean)
    stats[sub] = {{"mean", std::vector<double>(m.data(), m.data() + m.size())},
                  {"scale", std::vector<double>(scale.at(sub).data(), scale.at(sub).data() + scale.at(sub).size())}};
  json j = {{"format", "karmarank-schema"},
            {"version", 1},
            {"input_names", input.names},
            {"kept", kept},
            {"names", output().names},
            {"hash", output().hash()},
            {"dropped", dropped},
            {"dropped_reason", "zero training variance in every subreddit"},
            {"normalization", stats}};
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << j.dump(1) << '\n';
}

Normalizer Normalizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "karmarank-schema" || j.value("version", 0) != 1)
    fail_data("unsupported schema file " + path);
  Normalizer n;
  n.input.names = j.at("input_names").get<std::vector<std::string>>();
  for (const auto& name : n.input.names) n.input.groups.push_back(name.substr(0, name.find(':')));
  n.kept = j.at("kept").get<std::vector<std::size_t>>();
  n.dropped = j.at("dropped").get<std::vector<std::string>>();
  for (const auto& [sub, st] : j.at("normalization").items()) {
    const auto m = st.at("mean").get<std::vector<double>>();
    const auto s = st.at("scale").get<std::vector<double>>();
    n.mean[sub] = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    n.scale[sub] = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  }
  return n;
}

void write_feature_tsv(const RankingData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "list_id\tthread_id\tsubreddit\tcomment_id\tcreated_utc";
  for (const auto& n : data.schema.names) out << '\t' << n;
  out << "\tkarma\n";
  for (const auto& l : data.lists)
    for (Eigen::Index m = 0; m < l.features.rows(); ++m) {
      const auto mi = static_cast<std::size_t>(m);
      out << l.id << '\t' << l.thread_id << '\t' << l.subreddit << '\t' << l.member_ids[mi] << '\t'
          << l.created_utc[mi];
      for (Eigen::Index c = 0; c < l.features.cols(); ++c) out << '\t' << format_double(l.features(m, c));
      out << '\t' << format_double(l.karma[mi]) << '\n';
    }
}

RankingData read_feature_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) fail_data("empty feature file " + path);
  auto header = split(line, '\t');
  if (header.size() < 6 || header[0] != "list_id" || header.back() != "karma")
    fail_data("bad feature file header in " + path);
  RankingData data;
  for (std::size_t i = 5; i + 1 < header.size(); ++i) {
    data.schema.names.push_back(header[i]);
    data.schema.groups.push_back(header[i].substr(0, header[i].find(':')));
  }
  const auto d = static_cast<Eigen::Index>(data.schema.size());
  std::vector<std::vector<double>> rows;
  auto flush = [&](RankingList& l) {
    if (l.id.empty()) return;
    l.features.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (Eigen::Index c = 0; c < d; ++c) l.features(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    data.lists.push_back(std::move(l));
    l = RankingList{};
    rows.clear();
  };
  RankingList cur;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != header.size()) fail_data("ragged row in " + path);
    if (f[0] != cur.id) {
      flush(cur);
      cur.id = f[0];
      cur.thread_id = f[1];
      cur.subreddit = f[2];
    }
    cur.member_ids.push_back(f[3]);
    cur.created_utc.push_back(std::stoll(f[4]));
    std::vector<double> row;
    for (std::size_t i = 5; i + 1 < f.size(); ++i) row.push_back(std::stod(f[i]));
    rows.push_back(std::move(row));
    cur.karma.push_back(std::stod(f.back()));
  }
  flush(cur);
  return data;
}

}  // namespace karmarank
