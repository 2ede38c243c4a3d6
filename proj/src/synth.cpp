#include "karmarank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "karmarank/common.hpp"
#include "karmarank/features.hpp"
#include "karmarank/textprep.hpp"

namespace karmarank {

using nlohmann::json;

namespace {

enum Group { GT, AR, INFO, LEX, RESP, REL, MOOD, COMM, kGroups };

constexpr int kSentences = 4;
constexpr int kWordsPerSentence = 8;
constexpr int kTiers = kSynthMaxLevel + 1;
constexpr int kAuthorsPerTier = 10;
constexpr double kRootReplyRate = 0.35;
constexpr double kLateReplyRate = 0.6;

const char* const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st"};
const char* const kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

std::string syllables(Rng& rng, int n) {
  std::string w;
  for (int i = 0; i < n; ++i) {
    w += kOnsets[rng.index(std::size(kOnsets))];
    w += kVowels[rng.index(std::size(kVowels))];
  }
  return w;
}

// Distinct pseudo-words absent from `taken`; each new word is added to it.
std::vector<std::string> fresh_words(Rng& rng, std::size_t n, int syl, std::set<std::string>& taken) {
  std::vector<std::string> out;
  while (out.size() < n) {
    auto w = syllables(rng, syl);
    if (taken.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.index(v.size())];
}

struct Vocabulary {
  std::vector<std::string> generic, bait, positive, sentiment, seeds;
  std::map<std::string, std::vector<std::string>> topic, style;
  std::map<std::string, std::array<std::vector<std::string>, kTiers>> authors;
};

Vocabulary build_vocabulary(const SynthConfig& cfg, Rng& rng) {
  const std::string dir = cfg.data_dir.empty() ? default_data_dir() : cfg.data_dir;
  const auto res = TextResources::load(dir);
  Vocabulary v;
  std::set<std::string> taken;
  for (const auto& w : res.stopwords) taken.insert(w);
  for (const auto& [w, tag] : res.pos_lexicon) taken.insert(w);
  for (const auto& [w, s] : res.sentiment) {
    taken.insert(w);
    v.sentiment.push_back(w);
    if (s > 0) v.positive.push_back(w);
  }
  std::sort(v.sentiment.begin(), v.sentiment.end());
  std::sort(v.positive.begin(), v.positive.end());
  for (const char* list : {"argument", "neutral", "politeness", "profanity"})
    for (auto& w : read_word_list((std::filesystem::path(dir) / "seeds" / (std::string(list) + ".txt")).string())) {
      taken.insert(w);
      v.seeds.push_back(std::move(w));
    }

  v.generic = fresh_words(rng, 400, 2, taken);
  v.bait = fresh_words(rng, 10, 3, taken);
  for (const auto& sub : cfg.subreddits) {
    v.topic[sub] = fresh_words(rng, 60, 3, taken);
    v.style[sub] = fresh_words(rng, 15, 3, taken);
    for (int t = 0; t < kTiers; ++t)
      for (const auto& w : fresh_words(rng, kAuthorsPerTier, 3, taken)) v.authors[sub][t].push_back(w + "_" + sub);
  }
  return v;
}

std::string capitalized(std::string w) {
  w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

struct Draft {
  Comment c;
  std::array<int, kGroups> level{};
  int depth = 1;
};

class ThreadBuilder {
 public:
  ThreadBuilder(const SynthConfig& cfg, const Vocabulary& vocab, Rng& rng, std::set<std::string>& names,
                std::uint64_t& next_id)
      : cfg_(cfg), vocab_(vocab), rng_(rng), names_(names), next_id_(next_id) {}

  Thread build(const std::string& sub, std::int64_t start, SynthCorpus& out) {
    Thread t;
    t.post_id = "p" + std::to_string(next_id_++);
    t.subreddit = sub;
    t.created_utc = start;
    const auto& topic = vocab_.topic.at(sub);
    theme_ = topic;
    rng_.shuffle(theme_);
    theme_.resize(10);
    for (int i = 0; i < 6; ++i) title_.push_back(theme_[static_cast<std::size_t>(i)]);
    side_theme_.assign(theme_.begin() + 6, theme_.end());
    t.title = capitalized(join(title_)) + "?";
    std::vector<std::string> body;
    for (int i = 0; i < 20; ++i) body.push_back(rng_.uniform() < 0.5 ? pick(rng_, theme_) : pick(rng_, vocab_.generic));
    t.selftext = capitalized(join(body)) + ".";
    const auto& tiers = vocab_.authors.at(sub);
    t.author = pick(rng_, tiers[rng_.index(kTiers)]);

    const int n = cfg_.min_comments + static_cast<int>(rng_.index(
                                          static_cast<std::size_t>(cfg_.max_comments - cfg_.min_comments + 1)));
    std::vector<Draft> main;
    std::int64_t now = start;
    for (int i = 0; i < n; ++i) {
      now += 1 + static_cast<std::int64_t>(-120.0 * std::log(1.0 - rng_.uniform()));
      Draft d;
      if (i > 0 && rng_.uniform() >= kRootReplyRate) {
        const auto& parent = main[rng_.index(main.size())];
        d.c.parent_id = parent.c.id;
        d.depth = parent.depth + 1;
      }
      finish(d, t, now);
      main.push_back(std::move(d));
    }
    std::vector<Draft> late;
    for (const auto& p : main) {
      int replies = 0;
      for (int k = 0; k < p.level[RESP]; ++k) replies += rng_.uniform() < kLateReplyRate;
      for (int k = 0; k < replies; ++k) {
        Draft d;
        d.c.parent_id = p.c.id;
        d.depth = p.depth + 1;
        finish(d, t, p.c.created_utc + 7200 + static_cast<std::int64_t>(rng_.index(3600)));
        late.push_back(std::move(d));
      }
    }
    for (auto* part : {&main, &late})
      for (auto& d : *part) {
        std::array<int, 8> lv{};
        std::copy(d.level.begin(), d.level.end(), lv.begin());
        out.levels[d.c.id] = lv;
        t.comments.push_back(std::move(d.c));
      }
    title_.clear();
    t.sort_comments();
    return t;
  }

 private:
  static std::string join(const std::vector<std::string>& w) {
    std::string s;
    for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
    return s;
  }

  void finish(Draft& d, const Thread& t, std::int64_t when) {
    d.c.id = "c" + std::to_string(next_id_++);
    d.c.thread_id = t.post_id;
    d.c.subreddit = t.subreddit;
    d.c.created_utc = when;
    d.level[GT] = kSynthMaxLevel - std::min(d.depth - 1, kSynthMaxLevel);
    for (int g = AR; g < kGroups; ++g) d.level[static_cast<std::size_t>(g)] = static_cast<int>(rng_.index(kTiers));

    const auto& pool = vocab_.authors.at(t.subreddit)[static_cast<std::size_t>(d.level[AR])];
    d.c.author = pick(rng_, pool);
    if (d.level[AR] == 3) d.c.flair = "expert";
    if (d.level[AR] == 2) d.c.flair = "regular";
    d.c.body = body(d.level, t.subreddit);

    double z = cfg_.noise_sd * rng_.normal();
    for (std::size_t g = 0; g < kFeatureGroups.size(); ++g) {
      auto it = cfg_.signal.find(kFeatureGroups[g]);
      if (it != cfg_.signal.end()) z += it->second * d.level[g];
    }
    d.c.karma = static_cast<std::int64_t>(std::llround(std::exp(z))) + cfg_.karma_offset;
    if (rng_.uniform() < cfg_.deleted_rate) {
      d.c.is_deleted = true;
      d.c.body = "[deleted]";
      d.c.author = "[deleted]";
      d.c.flair.reset();
    }
  }

  std::string body(const std::array<int, kGroups>& level, const std::string& sub) {
    std::vector<std::string> signal;
    for (int k = 0; k < level[INFO]; ++k)
      signal.push_back(k == 2 ? "http://www." + fresh_words(rng_, 1, 3, names_)[0] + ".com/"
                              : capitalized(fresh_words(rng_, 1, 4, names_)[0]));
    for (int k = 0; k < level[LEX]; ++k) signal.push_back(k % 2 ? "your" : "you");
    for (int k = 0; k < level[RESP]; ++k) signal.push_back(pick(rng_, vocab_.bait));
    auto title = title_;
    rng_.shuffle(title);
    for (int k = 0; k < level[REL]; ++k) signal.push_back(title[static_cast<std::size_t>(k)]);
    for (int k = 0; k < level[MOOD]; ++k) signal.push_back(pick(rng_, vocab_.positive));
    for (int k = 0; k < level[COMM]; ++k) signal.push_back(pick(rng_, vocab_.style.at(sub)));
    signal.push_back(pick(rng_, vocab_.seeds));
    if (rng_.uniform() < 0.5) signal.push_back(pick(rng_, vocab_.sentiment));

    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < kSentences * kWordsPerSentence; ++i)
      if (i % kWordsPerSentence != 0 && i % kWordsPerSentence != kWordsPerSentence - 1) open.push_back(i);
    rng_.shuffle(open);
    std::vector<std::string> slots(kSentences * kWordsPerSentence);
    for (std::size_t k = 0; k < signal.size(); ++k) slots[open[k]] = signal[k];
    const auto& topic = vocab_.topic.at(sub);
    for (auto& s : slots)
      if (s.empty()) {
        const double u = rng_.uniform();
        s = u < 0.8 ? pick(rng_, vocab_.generic) : u < 0.88 ? pick(rng_, side_theme_) : pick(rng_, topic);
      }
    for (int k = 0; k < level[LEX]; ++k) slots[open[signal.size() + static_cast<std::size_t>(k)]] += ",";

    std::string text;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const bool first = i % kWordsPerSentence == 0;
      if (first && i > 0) text += " ";
      if (!first) text += " ";
      text += first ? capitalized(slots[i]) : slots[i];
      if (i % kWordsPerSentence == kWordsPerSentence - 1) text += ".";
    }
    return text;
  }

  const SynthConfig& cfg_;
  const Vocabulary& vocab_;
  Rng& rng_;
  std::set<std::string>& names_;
  std::uint64_t& next_id_;
  std::vector<std::string> theme_, title_, side_theme_;  // side: theme words not in the title
};

}  // namespace

std::pair<std::string, double> parse_signal(const std::string& spec) {
  const auto eq = spec.find('=');
  std::string group = trim(spec.substr(0, eq));
  std::transform(group.begin(), group.end(), group.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (!is_feature_group(group)) fail_config("unknown signal group '" + group + "'");
  double w = 1.0;
  if (eq != std::string::npos) {
    try {
      w = std::stod(spec.substr(eq + 1));
    } catch (const std::exception&) {
      fail_config("bad signal weight in '" + spec + "'");
    }
  }
  if (!(w > 0)) fail_config("signal weight must be positive in '" + spec + "'");
  return {group, w};
}

SynthCorpus generate_synth(const SynthConfig& cfg) {
  if (cfg.subreddits.empty()) fail_config("synth needs at least one subreddit");
  if (cfg.threads < 1) fail_config("synth needs at least one thread");
  if (cfg.min_comments < 1 || cfg.max_comments < cfg.min_comments) fail_config("synth comment range is empty");
  for (const auto& [g, w] : cfg.signal)
    if (!is_feature_group(g)) fail_config("unknown signal group '" + g + "'");

  Rng rng(derive_seed(cfg.seed, "synth"));
  const Vocabulary vocab = build_vocabulary(cfg, rng);
  std::set<std::string> names;
  for (const auto& w : vocab.generic) names.insert(w);
  std::uint64_t next_id = 1;
  ThreadBuilder builder(cfg, vocab, rng, names, next_id);

  SynthCorpus out;
  for (int k = 0; k < cfg.threads; ++k) {
    const auto& sub = cfg.subreddits[static_cast<std::size_t>(k) % cfg.subreddits.size()];
    out.store.add_thread(builder.build(sub, cfg.start_utc + std::int64_t{3 * 3600} * k, out));
  }
  return out;
}

void write_reddit_dump(const CorpusStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  for (const auto& [sub, threads] : store.by_subreddit())
    for (const auto& t : threads) {
      json post = {{"id", "t3_" + t.post_id}, {"subreddit", t.subreddit}, {"author", t.author},
                   {"title", t.title},        {"selftext", t.selftext},   {"url", t.url},
                   {"created_utc", t.created_utc}};
      out << post.dump() << '\n';
      for (const auto& c : t.comments) {
        json j = {{"id", "t1_" + c.id},
                  {"link_id", "t3_" + t.post_id},
                  {"parent_id", c.parent_id ? "t1_" + *c.parent_id : "t3_" + t.post_id},
                  {"author", c.author},
                  {"body", c.body},
                  {"score", c.karma},
                  {"created_utc", c.created_utc},
                  {"subreddit", t.subreddit}};
        if (c.flair) j["author_flair_text"] = *c.flair;
        out << j.dump() << '\n';
      }
    }
}

}  // namespace karmarank
