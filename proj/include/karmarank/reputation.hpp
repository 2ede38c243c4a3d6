#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "karmarank/corpus.hpp"

namespace karmarank {

struct AuthorHistory {
  std::string author;
  std::vector<std::int64_t> comment_karmas;
};

// Largest k such that at least k comments have karma >= k (h-index semantics).
std::int64_t k_index(std::span<const std::int64_t> karmas);
inline std::int64_t k_index(const AuthorHistory& h) { return k_index(h.comment_karmas); }

// Per-author karma history with the thread each comment came from, so that a
// thread's own comments can be left out when scoring a participant of it.
class ReputationTable {
 public:
  ReputationTable() = default;
  explicit ReputationTable(const std::vector<const Thread*>& threads);

  void add(const std::string& author, const std::string& thread_id, std::int64_t karma);
  std::int64_t k_index(const std::string& author) const;
  std::int64_t k_index_excluding(const std::string& author, const std::string& thread_id) const;
  std::map<std::string, AuthorHistory> histories() const;
  std::size_t author_count() const { return entries_.size(); }

  static bool is_anonymous(const std::string& author);

  // TSV rows: author, thread id, karma.
  void save(const std::string& path) const;
  static ReputationTable load(const std::string& path);

 private:
  std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> entries_;
};

struct KIndexRow {
  std::string subreddit;
  double top1_pct = 0.0;
  double top3_pct = 0.0;
  std::size_t n_threads = 0;   // threads scored
  std::size_t n_excluded = 0;  // threads with fewer than two participants
};

struct KIndexOptions {
  bool include_post_author = false;
};

// Percentage of threads whose top-karma comment was written by one of the
// n_top highest k-index participants. Boundary ties count as "top".
double top_comment_rate(const std::vector<const Thread*>& threads,
                        const std::map<std::string, std::int64_t>& author_k, int n_top,
                        const KIndexOptions& opts, std::size_t* n_scored = nullptr,
                        std::size_t* n_excluded = nullptr);

std::vector<KIndexRow> kindex_report(const CorpusStore& store, const KIndexOptions& opts = {});
std::vector<KIndexRow> kindex_report(const CorpusStore& store,
                                     const std::map<std::string, std::int64_t>& author_k,
                                     const KIndexOptions& opts = {});
void write_kindex_csv(const std::vector<KIndexRow>& rows, const std::string& path);

}  // namespace karmarank
