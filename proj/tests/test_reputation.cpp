#include <doctest.h>

#include "karmarank/common.hpp"
#include "karmarank/reputation.hpp"
#include "oracles.hpp"

using namespace karmarank;

TEST_CASE("k_index small cases") {
  CHECK(k_index(std::vector<std::int64_t>{}) == 0);
  CHECK(k_index(std::vector<std::int64_t>{5, 3, 3, 1}) == 3);
  CHECK(k_index(std::vector<std::int64_t>{1, 1, 1}) == 1);
  CHECK(k_index(std::vector<std::int64_t>{-4, 0, -1}) == 0);
  CHECK(k_index(std::vector<std::int64_t>{100}) == 1);
}

TEST_CASE("property: k_index matches the brute-force oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::int64_t> h(rng.index(120));
    for (auto& x : h) x = static_cast<std::int64_t>(rng.index(200)) - 10;
    CHECK(k_index(h) == oracle::k_index(h));
    CHECK(k_index(h) <= static_cast<std::int64_t>(h.size()));
  }
}

TEST_CASE("property: k_index is monotone under additions") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::int64_t> h(rng.index(40));
    for (auto& x : h) x = static_cast<std::int64_t>(rng.index(60));
    const auto before = k_index(h);
    auto grown = h;
    grown.push_back(static_cast<std::int64_t>(rng.index(60)));
    CHECK(k_index(grown) >= before);
    // Comments with karma at most 0 never change the index.
    auto padded = h;
    for (int i = 0; i < 5; ++i) padded.push_back(-static_cast<std::int64_t>(rng.index(5)));
    CHECK(k_index(padded) == before);
  }
}

TEST_CASE("leave-thread-out k-index") {
  ReputationTable table;
  table.add("a", "t1", 10);
  table.add("a", "t1", 10);
  table.add("a", "t2", 4);
  table.add("a", "t3", 3);
  CHECK(table.k_index("a") == 3);
  CHECK(table.k_index_excluding("a", "t1") == 2);
  CHECK(table.k_index("nobody") == 0);
  CHECK(ReputationTable::is_anonymous("[deleted]"));
}

namespace {

Comment comment(const std::string& thread, const std::string& id, const std::string& author, std::int64_t karma,
                std::int64_t t) {
  Comment c;
  c.id = id;
  c.thread_id = thread;
  c.author = author;
  c.subreddit = "askscience";
  c.created_utc = t;
  c.karma = karma;
  return c;
}

}  // namespace

TEST_CASE("top comment by the top k-index participant") {
  Thread t;
  t.post_id = "p";
  t.subreddit = "askscience";
  t.author = "op";
  t.comments = {comment("p", "c1", "expert", 50, 10), comment("p", "c2", "novice", 2, 20),
                comment("p", "c3", "mid", 5, 30)};
  std::map<std::string, std::int64_t> k{{"expert", 9}, {"novice", 1}, {"mid", 4}};
  std::vector<const Thread*> threads{&t};
  std::size_t scored = 0, excluded = 0;
  CHECK(top_comment_rate(threads, k, 1, {}, &scored, &excluded) == doctest::Approx(100.0));
  CHECK(scored == 1);
  CHECK(excluded == 0);

  k["novice"] = 20;
  CHECK(top_comment_rate(threads, k, 1, {}) == doctest::Approx(0.0));
  CHECK(top_comment_rate(threads, k, 3, {}) == doctest::Approx(100.0));

  // A tie at the boundary counts both authors as top.
  k["novice"] = 9;
  CHECK(top_comment_rate(threads, k, 1, {}) == doctest::Approx(100.0));
}

TEST_CASE("single-participant threads are excluded") {
  Thread t;
  t.post_id = "p";
  t.subreddit = "askscience";
  t.author = "op";
  t.comments = {comment("p", "c1", "solo", 3, 10), comment("p", "c2", "solo", 1, 20)};
  std::vector<const Thread*> threads{&t};
  std::size_t scored = 0, excluded = 0;
  top_comment_rate(threads, {{"solo", 2}}, 1, {}, &scored, &excluded);
  CHECK(scored == 0);
  CHECK(excluded == 1);

  KIndexOptions with_op;
  with_op.include_post_author = true;
  top_comment_rate(threads, {{"solo", 2}}, 1, with_op, &scored, &excluded);
  CHECK(scored == 1);
  CHECK(excluded == 0);
}

TEST_CASE("karma independent of k-index gives Top1 near one in ten") {
  Rng rng(3);
  std::vector<Thread> threads(1000);
  std::map<std::string, std::int64_t> k;
  for (int i = 0; i < 1000; ++i) {
    Thread& t = threads[i];
    t.post_id = "p" + std::to_string(i);
    t.subreddit = "x";
    t.author = "op";
    for (int j = 0; j < 10; ++j) {
      const std::string author = "a" + std::to_string(i) + "_" + std::to_string(j);
      k[author] = j;  // distinct within the thread
      t.comments.push_back(comment(t.post_id, author + "c", author,
                                   static_cast<std::int64_t>(rng.index(1000000)), j));
    }
  }
  std::vector<const Thread*> ptrs;
  for (const auto& t : threads) ptrs.push_back(&t);
  const double top1 = top_comment_rate(ptrs, k, 1, {});
  const double top3 = top_comment_rate(ptrs, k, 3, {});
  CHECK(std::abs(top1 - 10.0) <= 3.0);
  CHECK(top3 >= top1);
}

TEST_CASE("kindex report over a store") {
  CorpusStore store;
  for (int i = 0; i < 20; ++i) {
    Thread t;
    t.post_id = "p" + std::to_string(i);
    t.subreddit = i % 2 ? "fitness" : "askmen";
    t.author = "op";
    t.comments = {comment(t.post_id, t.post_id + "a", "good", 30, 1), comment(t.post_id, t.post_id + "b", "bad", 1, 2),
                  comment(t.post_id, t.post_id + "c", "meh", 2, 3)};
    for (auto& c : t.comments) c.subreddit = t.subreddit;
    store.add_thread(t);
  }
  auto rows = kindex_report(store);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.n_threads == 10);
    CHECK(r.top1_pct == doctest::Approx(100.0));
    CHECK(r.top3_pct >= r.top1_pct);
  }
  const auto path = oracle::temp_path("kindex.csv");
  write_kindex_csv(rows, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "subreddit,top1_pct,top3_pct,n_threads");
}
