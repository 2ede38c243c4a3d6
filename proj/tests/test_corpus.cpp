#include <doctest.h>

#include <set>

#include "karmarank/common.hpp"
#include "karmarank/corpus.hpp"
#include "oracles.hpp"

using namespace karmarank;

namespace {

Thread make_thread(const std::string& id, int n_comments, std::int64_t gap_seconds = 30) {
  Thread t;
  t.post_id = id;
  t.subreddit = "fitness";
  t.author = "op";
  t.title = "title";
  t.created_utc = 1000;
  for (int i = 0; i < n_comments; ++i) {
    Comment c;
    c.id = id + "_c" + std::to_string(100 + i);
    c.thread_id = id;
    c.subreddit = t.subreddit;
    c.author = "u" + std::to_string(i % 7);
    c.created_utc = 1000 + gap_seconds * (i + 1);
    c.body = "text";
    c.karma = i;
    if (i > 0 && i % 3 == 0) c.parent_id = t.post_id + "_c" + std::to_string(100 + i - 1);
    t.comments.push_back(c);
  }
  t.sort_comments();
  return t;
}

}  // namespace

TEST_CASE("ingest a post with two comments") {
  const auto path = oracle::temp_path("ingest_small.jsonl");
  oracle::write_file(path,
                     R"({"id":"p1","subreddit":"Fitness","title":"Squats?","selftext":"how deep","author":"op","created_utc":100,"score":5})"
                     "\n"
                     R"({"id":"c1","link_id":"t3_p1","parent_id":"t3_p1","author":"a","created_utc":160,"body":"deep","score":3,"author_flair_text":"coach"})"
                     "\n"
                     R"({"id":"c2","link_id":"t3_p1","parent_id":"t1_c1","author":"b","created_utc":"200","body":"[deleted]","score":-1})"
                     "\n");
  CorpusStore store = ingest_dump(path);
  REQUIRE(store.thread_count() == 1);
  REQUIRE(store.comment_count() == 2);
  const Thread* t = store.find_thread("p1");
  REQUIRE(t);
  CHECK(t->subreddit == "fitness");
  CHECK(t->comments[0].flair == std::optional<std::string>("coach"));
  CHECK_FALSE(t->comments[0].parent_id.has_value());
  CHECK(t->comments[1].parent_id == std::optional<std::string>("c1"));
  CHECK(t->comments[1].is_deleted);
  CHECK(t->comments[1].karma == -1);
  CHECK(t->depth(1) == 2);
  CHECK(store.stats.malformed == 0);
}

TEST_CASE("malformed lines are counted and skipped") {
  const auto path = oracle::temp_path("ingest_bad.jsonl");
  oracle::write_file(path,
                     R"({"id":"p1","subreddit":"askmen","title":"t","author":"op","created_utc":100})"
                     "\n"
                     R"({"link_id":"t3_p1","parent_id":"t3_p1","author":"a","created_utc":160,"body":"no id","score":3})"
                     "\n"
                     R"({"id":"c2","link_id":"t3_p1","parent_id":"t1_zz","author":"b","created_utc":170,"body":"orphan parent","score":1})"
                     "\n"
                     "not json at all\n");
  CorpusStore store = ingest_dump(path);
  CHECK(store.stats.malformed == 2);
  CHECK(store.comment_count() == 1);
  CHECK(store.stats.reparented == 1);
  CHECK_FALSE(store.find_thread("p1")->comments[0].parent_id.has_value());
}

TEST_CASE("ingest errors") {
  CHECK_THROWS_AS(ingest_dump("/nonexistent/dump.jsonl"), Error);
  const auto path = oracle::temp_path("ingest_schema.jsonl");
  oracle::write_file(path, "{}\n");
  try {
    ingest_dump(path, "pushshift-v9");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("store round trip and stats") {
  CorpusStore store;
  store.add_thread(make_thread("a", 12));
  store.add_thread(make_thread("b", 20));
  const auto dir = oracle::temp_path("store_rt");
  save_store(store, dir);
  CorpusStore back = load_store(dir);
  REQUIRE(back.comment_count() == 32);
  const Thread* t = back.find_thread("b");
  REQUIRE(t);
  CHECK(t->comments.size() == 20);
  CHECK(t->comments[3].parent_id == store.find_thread("b")->comments[3].parent_id);

  auto stats = corpus_stats(back);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].posts == 2);
  CHECK(stats[0].comments_per_post == doctest::Approx(16.0));
  CHECK(format_stats_row({"fitness", 3000, 16.3}) == "fitness 3K posts, 16.3 comments/post");
  CHECK(format_stats_row({"askscience", 4000, 8.8}) == "askscience 4K posts, 8.8 comments/post");
}

TEST_CASE("comment lists: window enumeration") {
  ListParams p;
  p.length = 10;
  p.stride = 10;
  p.max_window_seconds = 0;
  p.max_lists_per_thread = 0;
  auto lists = build_comment_lists(make_thread("t", 25), p, 1);
  REQUIRE(lists.size() == 2);
  CHECK(lists[0].members.front() == "t_c100");
  CHECK(lists[0].members.back() == "t_c109");
  CHECK(lists[1].members.front() == "t_c110");
  CHECK(lists[1].members.back() == "t_c119");
  CHECK(lists[1].history_cutoff_utc == 1000 + 30 * 20);
  CHECK(lists[0].window_span_seconds == 270);

  CHECK(build_comment_lists(make_thread("s", 9), p, 1).empty());
}

TEST_CASE("comment lists: window limit and deleted members") {
  ListParams p;
  p.stride = 1;
  p.max_lists_per_thread = 0;
  p.max_window_seconds = 300;
  // Spacing of 40 s gives a 360 s span for 10 comments.
  CHECK(build_comment_lists(make_thread("w", 12, 40), p, 1).empty());
  p.max_window_seconds = 360;
  CHECK(build_comment_lists(make_thread("w", 12, 40), p, 1).size() == 3);

  Thread t = make_thread("d", 11);
  t.comments[4].is_deleted = true;
  p.max_window_seconds = 0;
  auto lists = build_comment_lists(t, p, 1);
  REQUIRE(lists.size() == 1);
  for (const auto& m : lists[0].members) CHECK(m != t.comments[4].id);
}

TEST_CASE("comment lists: sampling cap is reproducible") {
  ListParams p;
  p.stride = 1;
  p.max_window_seconds = 0;
  p.max_lists_per_thread = 5;
  Thread t = make_thread("long", 40);
  auto a = build_comment_lists(t, p, 7);
  auto b = build_comment_lists(t, p, 7);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
}

TEST_CASE("property: lists are single-threaded and strictly time-ordered") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Thread t;
    t.post_id = "r" + std::to_string(trial);
    t.subreddit = "x";
    t.created_utc = 0;
    const int n = 5 + static_cast<int>(rng.index(60));
    for (int i = 0; i < n; ++i) {
      Comment c;
      c.id = "c" + std::to_string(i);
      c.thread_id = t.post_id;
      c.created_utc = static_cast<std::int64_t>(rng.index(5000));
      c.is_deleted = rng.uniform() < 0.1;
      t.comments.push_back(c);
    }
    t.sort_comments();
    ListParams p;
    p.stride = 1 + static_cast<int>(rng.index(4));
    p.max_window_seconds = 1 + static_cast<std::int64_t>(rng.index(3000));
    for (const auto& l : build_comment_lists(t, p, 3)) {
      CHECK(l.thread_id == t.post_id);
      CHECK(l.members.size() == 10);
      CHECK(l.window_span_seconds <= p.max_window_seconds);
      for (std::size_t k = 1; k < l.members.size(); ++k) {
        const auto i0 = t.index_of(l.members[k - 1]), i1 = t.index_of(l.members[k]);
        CHECK(i0 < i1);
      }
    }
  }
}

namespace {

std::vector<CommentList> grid_lists(int threads, int per_thread) {
  std::vector<CommentList> lists;
  for (int t = 0; t < threads; ++t)
    for (int k = 0; k < per_thread; ++k) {
      CommentList l;
      l.thread_id = "t" + std::to_string(t);
      l.id = l.thread_id + "#" + std::to_string(k);
      lists.push_back(l);
    }
  return lists;
}

}  // namespace

TEST_CASE("split: thread-level partition of 20 threads x 5 lists") {
  auto lists = grid_lists(20, 5);
  Split s = split_corpus(lists, 0.75, 0.20, 1);
  // Target 25 test lists; one thread holds 5.
  CHECK(s.test.size() >= 25);
  CHECK(s.test.size() <= 30);
  CHECK(s.train.size() + s.validation.size() + s.test.size() == 100);

  std::map<std::string, std::set<Part>> parts;
  auto note = [&](const std::vector<std::string>& ids, Part p) {
    for (const auto& id : ids) parts[id.substr(0, id.find('#'))].insert(p);
  };
  note(s.train, Part::Train);
  note(s.validation, Part::Validation);
  note(s.test, Part::Test);
  for (const auto& [_, ps] : parts) CHECK(ps.size() == 1);

  Split again = split_corpus(lists, 0.75, 0.20, 1);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);
  CHECK(again.test == s.test);
}

TEST_CASE("split: too few threads") {
  CHECK_THROWS_AS(split_corpus(grid_lists(2, 5), 0.75, 0.2, 1), Error);
  Split s = split_corpus(grid_lists(3, 1), 0.75, 0.2, 1);
  CHECK(s.train.size() == 1);
  CHECK(s.validation.size() == 1);
  CHECK(s.test.size() == 1);
}

TEST_CASE("property: split disjointness holds for 100 seeds") {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<CommentList> lists;
    const int threads = 3 + static_cast<int>(rng.index(40));
    for (int t = 0; t < threads; ++t) {
      const int n = 1 + static_cast<int>(rng.index(8));
      for (int k = 0; k < n; ++k) {
        CommentList l;
        l.thread_id = "t" + std::to_string(t);
        l.id = l.thread_id + "#" + std::to_string(k);
        lists.push_back(l);
      }
    }
    Split s = split_corpus(lists, 0.75, 0.2, seed);
    std::set<std::string> seen;
    for (auto* v : {&s.train, &s.validation, &s.test})
      for (const auto& id : *v) CHECK(seen.insert(id).second);
    CHECK(seen.size() == lists.size());
    for (const auto& id : s.test) CHECK(s.part_of_thread(id.substr(0, id.find('#'))) == Part::Test);
    for (const auto& id : s.train) CHECK(s.part_of_thread(id.substr(0, id.find('#'))) == Part::Train);
    CHECK_FALSE(s.train.empty());
    CHECK_FALSE(s.validation.empty());
    CHECK_FALSE(s.test.empty());
  }
}

TEST_CASE("lists and split persist") {
  auto lists = grid_lists(4, 2);
  lists[0].members = {"a", "b"};
  lists[0].history_cutoff_utc = 42;
  const auto lp = oracle::temp_path("lists.jsonl");
  save_lists(lists, lp);
  auto back = load_lists(lp);
  REQUIRE(back.size() == lists.size());
  CHECK(back[0].members == lists[0].members);
  CHECK(back[0].history_cutoff_utc == 42);

  Split s = split_corpus(lists, 0.75, 0.2, 3);
  const auto sp = oracle::temp_path("split.json");
  save_split(s, sp);
  Split sb = load_split(sp);
  CHECK(sb.test == s.test);
  CHECK(sb.thread_part == s.thread_part);
}
