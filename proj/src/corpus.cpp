#include "karmarank/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "karmarank/common.hpp"

namespace karmarank {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool comment_before(const Comment& a, const Comment& b) {
  if (a.created_utc != b.created_utc) return a.created_utc < b.created_utc;
  return a.id < b.id;
}

std::string strip_kind_prefix(const std::string& s) {
  // t1_ = comment, t3_ = link/post
  if (s.size() > 3 && s[0] == 't' && s[2] == '_') return s.substr(3);
  return s;
}

std::optional<std::int64_t> as_int(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return static_cast<std::int64_t>(std::llround(v.get<double>()));
  if (v.is_string()) {
    try {
      std::size_t pos = 0;
      const auto& s = v.get_ref<const std::string&>();
      double d = std::stod(s, &pos);
      if (pos != s.size()) return std::nullopt;
      return static_cast<std::int64_t>(std::llround(d));
    } catch (...) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string str_or(const json& j, const char* key, const std::string& fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return fallback;
  return it->get<std::string>();
}

bool is_deleted_marker(const std::string& s) { return s == "[deleted]" || s == "[removed]"; }

json comment_to_json(const Comment& c) {
  json j = {{"id", c.id},           {"author", c.author},   {"created_utc", c.created_utc},
            {"body", c.body},       {"karma", c.karma},     {"is_deleted", c.is_deleted}};
  j["parent_id"] = c.parent_id ? json(*c.parent_id) : json(nullptr);
  j["flair"] = c.flair ? json(*c.flair) : json(nullptr);
  return j;
}

Comment comment_from_json(const json& j, const std::string& thread_id, const std::string& sub) {
  Comment c;
  c.id = j.at("id").get<std::string>();
  if (!j.at("parent_id").is_null()) c.parent_id = j.at("parent_id").get<std::string>();
  c.thread_id = thread_id;
  c.subreddit = sub;
  c.author = j.at("author").get<std::string>();
  c.created_utc = j.at("created_utc").get<std::int64_t>();
  c.body = j.at("body").get<std::string>();
  c.karma = j.at("karma").get<std::int64_t>();
  if (!j.at("flair").is_null()) c.flair = j.at("flair").get<std::string>();
  c.is_deleted = j.at("is_deleted").get<bool>();
  return c;
}

}  // namespace

void Thread::build_index() const {
  index_.clear();
  for (std::size_t i = 0; i < comments.size(); ++i) index_.emplace(comments[i].id, i);
}

const Comment* Thread::find(const std::string& comment_id) const {
  auto i = index_of(comment_id);
  return i == comments.size() ? nullptr : &comments[i];
}

std::size_t Thread::index_of(const std::string& comment_id) const {
  if (index_.size() != comments.size()) build_index();
  auto it = index_.find(comment_id);
  if (it == index_.end() || it->second >= comments.size() || comments[it->second].id != comment_id) {
    build_index();
    it = index_.find(comment_id);
    if (it == index_.end()) return comments.size();
  }
  return it->second;
}

int Thread::depth(std::size_t comment_index) const {
  int d = 1;
  const Comment* c = &comments.at(comment_index);
  // Parents always precede children, so the walk is bounded by the comment count.
  while (c->parent_id) {
    const Comment* p = find(*c->parent_id);
    if (!p || d > static_cast<int>(comments.size())) break;
    c = p;
    ++d;
  }
  return d;
}

void Thread::sort_comments() {
  std::sort(comments.begin(), comments.end(), comment_before);
  build_index();
}

void CorpusStore::add_thread(Thread t) {
  auto& bucket = threads_[t.subreddit];
  locator_[t.post_id] = {t.subreddit, bucket.size()};
  bucket.push_back(std::move(t));
}

std::vector<std::string> CorpusStore::subreddits() const {
  std::vector<std::string> out;
  for (const auto& [sub, _] : threads_) out.push_back(sub);
  return out;
}

const Thread* CorpusStore::find_thread(const std::string& post_id) const {
  auto it = locator_.find(post_id);
  if (it == locator_.end()) return nullptr;
  return &threads_.at(it->second.first)[it->second.second];
}

std::size_t CorpusStore::thread_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : threads_) n += v.size();
  return n;
}

std::size_t CorpusStore::comment_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : threads_)
    for (const auto& t : v) n += t.comments.size();
  return n;
}

CorpusStore ingest_dump(const std::string& path, const std::string& schema) {
  return ingest_dump(std::vector<std::string>{path}, schema);
}

CorpusStore ingest_dump(const std::vector<std::string>& paths, const std::string& schema) {
  if (schema != kRedditJsonlSchema) fail_config("unknown dump schema '" + schema + "'");

  IngestStats stats;
  std::map<std::string, Thread> posts;
  std::vector<Comment> comments;
  std::unordered_set<std::string> seen_ids;

  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) fail_data("cannot read dump " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      ++stats.lines;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        ++stats.malformed;
        continue;
      }
      auto id_it = j.find("id");
      auto created = j.contains("created_utc") ? as_int(j["created_utc"]) : std::nullopt;
      std::string sub = str_or(j, "subreddit");
      if (id_it == j.end() || !id_it->is_string() || !created) {
        ++stats.malformed;
        continue;
      }
      std::string id = strip_kind_prefix(id_it->get<std::string>());
      if (!seen_ids.insert(id).second) {
        ++stats.malformed;
        continue;
      }
      std::transform(sub.begin(), sub.end(), sub.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      auto score = j.contains("score") ? as_int(j["score"]) : std::nullopt;

      if (j.contains("title")) {
        if (sub.empty()) {
          ++stats.malformed;
          continue;
        }
        Thread t;
        t.post_id = id;
        t.subreddit = sub;
        t.author = str_or(j, "author", "[deleted]");
        t.title = str_or(j, "title");
        t.selftext = str_or(j, "selftext");
        if (is_deleted_marker(t.selftext)) t.selftext.clear();
        t.url = str_or(j, "url");
        t.created_utc = *created;
        posts.emplace(id, std::move(t));
      } else if (j.contains("body") && j.contains("link_id") && score) {
        Comment c;
        c.id = id;
        c.thread_id = strip_kind_prefix(str_or(j, "link_id"));
        std::string parent = strip_kind_prefix(str_or(j, "parent_id", c.thread_id));
        if (parent != c.thread_id) c.parent_id = parent;
        c.author = str_or(j, "author", "[deleted]");
        c.subreddit = sub;
        c.created_utc = *created;
        c.body = str_or(j, "body");
        c.karma = *score;
        std::string flair = str_or(j, "author_flair_text");
        if (!flair.empty()) c.flair = flair;
        c.is_deleted = is_deleted_marker(c.body) || is_deleted_marker(c.author);
        if (c.thread_id.empty()) {
          ++stats.malformed;
          continue;
        }
        comments.push_back(std::move(c));
      } else {
        ++stats.malformed;
      }
    }
  }

  for (auto& c : comments) {
    auto it = posts.find(c.thread_id);
    if (it == posts.end()) {
      ++stats.orphan_comments;
      continue;
    }
    if (c.created_utc < it->second.created_utc) {
      ++stats.malformed;
      continue;
    }
    // The post is authoritative for the community.
    c.subreddit = it->second.subreddit;
    it->second.comments.push_back(std::move(c));
  }

  CorpusStore store;
  for (auto& [id, t] : posts) {
    t.sort_comments();
    // A parent must exist and precede its child; otherwise the comment hangs off the post.
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < t.comments.size(); ++i) {
      auto& c = t.comments[i];
      if (c.parent_id) {
        auto p = pos.find(*c.parent_id);
        if (p == pos.end()) {
          c.parent_id.reset();
          ++stats.reparented;
        }
      }
      pos.emplace(c.id, i);
    }
    store.add_thread(std::move(t));
  }

  if (stats.lines > 0 && stats.malformed * 10 > stats.lines) {
    std::cerr << "warning: " << stats.malformed << " of " << stats.lines
              << " dump lines were malformed and skipped\n";
  }
  store.stats = stats;
  return store;
}

void save_store(const CorpusStore& store, const std::string& dir) {
  fs::create_directories(dir);
  json meta = {{"format", "karmarank-corpus"},
               {"version", 1},
               {"subreddits", store.subreddits()},
               {"lines", store.stats.lines},
               {"malformed", store.stats.malformed},
               {"orphan_comments", store.stats.orphan_comments},
               {"reparented", store.stats.reparented}};
  {
    std::ofstream out(fs::path(dir) / "meta.json");
    if (!out) fail_data("cannot write corpus store in " + dir);
    out << meta.dump(2) << '\n';
  }
  for (const auto& [sub, threads] : store.by_subreddit()) {
    std::ofstream out(fs::path(dir) / (sub + ".jsonl"));
    for (const auto& t : threads) {
      json j = {{"post_id", t.post_id}, {"subreddit", t.subreddit}, {"author", t.author},
                {"title", t.title},     {"selftext", t.selftext},   {"url", t.url},
                {"created_utc", t.created_utc}};
      json cs = json::array();
      for (const auto& c : t.comments) cs.push_back(comment_to_json(c));
      j["comments"] = std::move(cs);
      out << j.dump() << '\n';
    }
  }
}

CorpusStore load_store(const std::string& dir) {
  std::ifstream meta_in(fs::path(dir) / "meta.json");
  if (!meta_in) fail_data("no corpus store at " + dir + " (run the ingest stage)");
  json meta = json::parse(meta_in, nullptr, false);
  if (meta.is_discarded() || meta.value("format", "") != "karmarank-corpus" ||
      meta.value("version", 0) != 1)
    fail_data("unsupported corpus store format in " + dir);

  CorpusStore store;
  store.stats.lines = meta.value("lines", std::size_t{0});
  store.stats.malformed = meta.value("malformed", std::size_t{0});
  store.stats.orphan_comments = meta.value("orphan_comments", std::size_t{0});
  store.stats.reparented = meta.value("reparented", std::size_t{0});
  for (const auto& sub : meta.at("subreddits")) {
    std::ifstream in(fs::path(dir) / (sub.get<std::string>() + ".jsonl"));
    if (!in) fail_data("missing corpus shard for " + sub.get<std::string>());
    std::string line;
    while (std::getline(in, line)) {
      json j = json::parse(line);
      Thread t;
      t.post_id = j.at("post_id").get<std::string>();
      t.subreddit = j.at("subreddit").get<std::string>();
      t.author = j.at("author").get<std::string>();
      t.title = j.at("title").get<std::string>();
      t.selftext = j.at("selftext").get<std::string>();
      t.url = j.at("url").get<std::string>();
      t.created_utc = j.at("created_utc").get<std::int64_t>();
      for (const auto& cj : j.at("comments"))
        t.comments.push_back(comment_from_json(cj, t.post_id, t.subreddit));
      t.sort_comments();
      store.add_thread(std::move(t));
    }
  }
  return store;
}

std::vector<SubredditStats> corpus_stats(const CorpusStore& store) {
  std::vector<SubredditStats> out;
  for (const auto& [sub, threads] : store.by_subreddit()) {
    SubredditStats s;
    s.subreddit = sub;
    s.posts = threads.size();
    std::size_t n = 0;
    for (const auto& t : threads) n += t.comments.size();
    s.comments_per_post = s.posts ? static_cast<double>(n) / static_cast<double>(s.posts) : 0.0;
    out.push_back(s);
  }
  return out;
}

std::string format_stats_row(const SubredditStats& s) {
  std::string posts;
  if (s.posts >= 1000)
    posts = std::to_string(static_cast<long long>(std::llround(s.posts / 1000.0))) + "K";
  else
    posts = std::to_string(s.posts);
  return s.subreddit + " " + posts + " posts, " + format_fixed(s.comments_per_post, 1) +
         " comments/post";
}

void write_stats_csv(const std::vector<SubredditStats>& stats, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "subreddit,posts,comments_per_post\n";
  for (const auto& s : stats)
    out << s.subreddit << ',' << s.posts << ',' << format_fixed(s.comments_per_post, 1) << '\n';
}

std::vector<CommentList> build_comment_lists(const Thread& thread, const ListParams& params,
                                             std::uint64_t seed) {
  if (params.length < 2) fail_config("comment list length must be at least 2");
  if (params.stride < 1) fail_config("comment list stride must be at least 1");

  std::vector<const Comment*> eligible;
  for (const auto& c : thread.comments)
    if (!c.is_deleted) eligible.push_back(&c);

  const auto L = static_cast<std::size_t>(params.length);
  std::vector<CommentList> lists;
  if (eligible.size() < L) return lists;

  for (std::size_t start = 0; start + L <= eligible.size();
       start += static_cast<std::size_t>(params.stride)) {
    const auto span = eligible[start + L - 1]->created_utc - eligible[start]->created_utc;
    if (params.max_window_seconds > 0 && span > params.max_window_seconds) continue;
    CommentList cl;
    cl.id = thread.post_id + "#" + std::to_string(start);
    cl.thread_id = thread.post_id;
    cl.subreddit = thread.subreddit;
    for (std::size_t k = 0; k < L; ++k) cl.members.push_back(eligible[start + k]->id);
    cl.window_span_seconds = span;
    cl.history_cutoff_utc = eligible[start + L - 1]->created_utc;
    lists.push_back(std::move(cl));
  }

  const auto cap = static_cast<std::size_t>(std::max(params.max_lists_per_thread, 0));
  if (cap > 0 && lists.size() > cap) {
    Rng rng(derive_seed(seed, "sampling:" + thread.post_id));
    std::vector<std::size_t> idx(lists.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<CommentList> kept;
    for (auto i : idx) kept.push_back(std::move(lists[i]));
    lists = std::move(kept);
  }
  return lists;
}

std::vector<CommentList> build_all_lists(const CorpusStore& store, const ListParams& params,
                                         std::uint64_t seed) {
  std::vector<CommentList> out;
  for (const auto& [_, threads] : store.by_subreddit())
    for (const auto& t : threads) {
      auto lists = build_comment_lists(t, params, seed);
      std::move(lists.begin(), lists.end(), std::back_inserter(out));
    }
  return out;
}

const char* part_name(Part p) {
  switch (p) {
    case Part::Train: return "train";
    case Part::Validation: return "validation";
    case Part::Test: return "test";
  }
  return "?";
}

std::optional<Part> Split::part_of_thread(const std::string& thread_id) const {
  auto it = thread_part.find(thread_id);
  if (it == thread_part.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& Split::ids(Part p) const {
  switch (p) {
    case Part::Train: return train;
    case Part::Validation: return validation;
    case Part::Test: return test;
  }
  return train;
}

Split split_corpus(const std::vector<CommentList>& lists, double train_frac,
                   double val_frac_of_train, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0) ||
      !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0))
    fail_config("split fractions must lie strictly between 0 and 1");

  std::map<std::string, std::vector<std::string>> by_thread;
  for (const auto& l : lists) by_thread[l.thread_id].push_back(l.id);
  if (by_thread.size() < 3)
    fail_data("split needs at least 3 threads with comment lists, found " +
              std::to_string(by_thread.size()));

  std::vector<std::string> order;
  for (const auto& [t, _] : by_thread) order.push_back(t);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  Split s;
  s.seed = seed;
  const double total = static_cast<double>(lists.size());
  const double test_target = (1.0 - train_frac) * total;

  std::size_t next = 0;
  std::size_t test_count = 0;
  // Leave at least two threads for train and validation.
  while (next + 2 < order.size() && (test_count == 0 || test_count < test_target)) {
    const auto& t = order[next++];
    s.thread_part[t] = Part::Test;
    for (const auto& id : by_thread[t]) s.test.push_back(id);
    test_count += by_thread[t].size();
  }
  const double val_target = val_frac_of_train * (total - static_cast<double>(test_count));
  std::size_t val_count = 0;
  while (next + 1 < order.size() && (val_count == 0 || val_count < val_target)) {
    const auto& t = order[next++];
    s.thread_part[t] = Part::Validation;
    for (const auto& id : by_thread[t]) s.validation.push_back(id);
    val_count += by_thread[t].size();
  }
  for (; next < order.size(); ++next) {
    const auto& t = order[next];
    s.thread_part[t] = Part::Train;
    for (const auto& id : by_thread[t]) s.train.push_back(id);
  }
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

void save_lists(const std::vector<CommentList>& lists, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  for (const auto& l : lists) {
    json j = {{"id", l.id},
              {"thread_id", l.thread_id},
              {"subreddit", l.subreddit},
              {"members", l.members},
              {"window_span_seconds", l.window_span_seconds},
              {"history_cutoff_utc", l.history_cutoff_utc}};
    out << j.dump() << '\n';
  }
}

std::vector<CommentList> load_lists(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read comment lists " + path);
  std::vector<CommentList> lists;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    CommentList l;
    l.id = j.at("id").get<std::string>();
    l.thread_id = j.at("thread_id").get<std::string>();
    l.subreddit = j.at("subreddit").get<std::string>();
    l.members = j.at("members").get<std::vector<std::string>>();
    l.window_span_seconds = j.at("window_span_seconds").get<std::int64_t>();
    l.history_cutoff_utc = j.at("history_cutoff_utc").get<std::int64_t>();
    lists.push_back(std::move(l));
  }
  return lists;
}

void save_split(const Split& split, const std::string& path) {
  json threads = json::object();
  for (const auto& [t, p] : split.thread_part) threads[t] = part_name(p);
  json j = {{"seed", split.seed},
            {"train", split.train},
            {"validation", split.validation},
            {"test", split.test},
            {"threads", threads}};
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << j.dump(1) << '\n';
}

Split load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read split " + path);
  json j = json::parse(in);
  Split s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train = j.at("train").get<std::vector<std::string>>();
  s.validation = j.at("validation").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  for (const auto& [t, p] : j.at("threads").items()) {
    const auto name = p.get<std::string>();
    s.thread_part[t] = name == "test" ? Part::Test
                       : name == "validation" ? Part::Validation
                                              : Part::Train;
  }
  return s;
}

}  // namespace karmarank
