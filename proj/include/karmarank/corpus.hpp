#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace karmarank {

struct Comment {
  std::string id;
  std::optional<std::string> parent_id;  // nullopt for direct replies to the post
  std::string thread_id;
  std::string author;
  std::string subreddit;
  std::int64_t created_utc = 0;
  std::string body;
  std::int64_t karma = 0;
  std::optional<std::string> flair;
  bool is_deleted = false;
};

struct Thread {
  std::string post_id;
  std::string subreddit;
  std::string author;
  std::string title;
  std::string selftext;
  std::string url;
  std::int64_t created_utc = 0;
  std::vector<Comment> comments;  // ordered by (created_utc, id)

  const Comment* find(const std::string& comment_id) const;
  std::size_t index_of(const std::string& comment_id) const;
  // Number of edges from the post to the comment (direct replies have depth 1).
  int depth(std::size_t comment_index) const;
  void sort_comments();

 private:
  mutable std::unordered_map<std::string, std::size_t> index_;
  void build_index() const;
};

struct IngestStats {
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t orphan_comments = 0;  // comment whose post is absent from the dump
  std::size_t reparented = 0;       // unresolved or non-preceding parent, reattached to the post
};

// Threads keyed by subreddit, then by post id. Read-only after ingestion.
class CorpusStore {
 public:
  void add_thread(Thread t);
  const std::map<std::string, std::vector<Thread>>& by_subreddit() const { return threads_; }
  std::vector<std::string> subreddits() const;
  const Thread* find_thread(const std::string& post_id) const;
  std::size_t thread_count() const;
  std::size_t comment_count() const;

  IngestStats stats;

 private:
  std::map<std::string, std::vector<Thread>> threads_;
  std::unordered_map<std::string, std::pair<std::string, std::size_t>> locator_;
};

inline constexpr const char* kRedditJsonlSchema = "reddit-jsonl";

// Reads one or more line-delimited JSON dumps. Post records carry "title",
// comment records carry "body" and "link_id".
CorpusStore ingest_dump(const std::vector<std::string>& paths,
                        const std::string& schema = kRedditJsonlSchema);
CorpusStore ingest_dump(const std::string& path, const std::string& schema = kRedditJsonlSchema);

// Corpus store directory: meta.json plus one JSONL shard per subreddit.
void save_store(const CorpusStore& store, const std::string& dir);
CorpusStore load_store(const std::string& dir);

struct SubredditStats {
  std::string subreddit;
  std::size_t posts = 0;
  double comments_per_post = 0.0;
};

std::vector<SubredditStats> corpus_stats(const CorpusStore& store);
// "fitness 3K posts, 16.3 comments/post"
std::string format_stats_row(const SubredditStats& s);
void write_stats_csv(const std::vector<SubredditStats>& stats, const std::string& path);

struct CommentList {
  std::string id;
  std::string thread_id;
  std::string subreddit;
  std::vector<std::string> members;
  std::int64_t window_span_seconds = 0;
  std::int64_t history_cutoff_utc = 0;
};

struct ListParams {
  int length = 10;
  std::int64_t max_window_seconds = 3600;  // <= 0 disables the window limit
  int stride = 10;
  int max_lists_per_thread = 10;          // <= 0 disables sampling
};

// Windows of consecutive non-deleted comments in global creation order.
std::vector<CommentList> build_comment_lists(const Thread& thread, const ListParams& params,
                                             std::uint64_t seed);
std::vector<CommentList> build_all_lists(const CorpusStore& store, const ListParams& params,
                                         std::uint64_t seed);

enum class Part { Train, Validation, Test };
const char* part_name(Part p);

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;

  // Thread-level assignment; every list of a thread shares its part.
  std::map<std::string, Part> thread_part;

  std::optional<Part> part_of_thread(const std::string& thread_id) const;
  const std::vector<std::string>& ids(Part p) const;
};

Split split_corpus(const std::vector<CommentList>& lists, double train_frac = 0.75,
                   double val_frac_of_train = 0.20, std::uint64_t seed = 0);

void save_lists(const std::vector<CommentList>& lists, const std::string& path);
std::vector<CommentList> load_lists(const std::string& path);
void save_split(const Split& split, const std::string& path);
Split load_split(const std::string& path);

}  // namespace karmarank
