#include "karmarank/reputation.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include "karmarank/common.hpp"

namespace karmarank {

std::int64_t k_index(std::span<const std::int64_t> karmas) {
  std::vector<std::int64_t> sorted(karmas.begin(), karmas.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::int64_t k = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto candidate = static_cast<std::int64_t>(i + 1);
    if (sorted[i] >= candidate)
      k = candidate;
    else
      break;
  }
  return k;
}

bool ReputationTable::is_anonymous(const std::string& author) {
  return author.empty() || author == "[deleted]" || author == "[removed]";
}

ReputationTable::ReputationTable(const std::vector<const Thread*>& threads) {
  for (const auto* t : threads)
    for (const auto& c : t->comments)
      if (!c.is_deleted) add(c.author, t->post_id, c.karma);
}

void ReputationTable::add(const std::string& author, const std::string& thread_id,
                          std::int64_t karma) {
  if (is_anonymous(author)) return;
  entries_[author].emplace_back(thread_id, karma);
}

std::int64_t ReputationTable::k_index(const std::string& author) const {
  auto it = entries_.find(author);
  if (it == entries_.end()) return 0;
  std::vector<std::int64_t> k;
  for (const auto& [_, karma] : it->second) k.push_back(karma);
  return karmarank::k_index(k);
}

std::int64_t ReputationTable::k_index_excluding(const std::string& author,
                                                const std::string& thread_id) const {
  auto it = entries_.find(author);
  if (it == entries_.end()) return 0;
  std::vector<std::int64_t> k;
  for (const auto& [t, karma] : it->second)
    if (t != thread_id) k.push_back(karma);
  return karmarank::k_index(k);
}

void ReputationTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "# karmarank-reputation 1\n";
  for (const auto& [author, entries] : entries_)
    for (const auto& [thread, karma] : entries) out << author << '\t' << thread << '\t' << karma << '\n';
}

ReputationTable ReputationTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# karmarank-reputation 1") fail_data("not a reputation table: " + path);
  ReputationTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) fail_data("bad reputation row in " + path);
    t.add(f[0], f[1], std::stoll(f[2]));
  }
  return t;
}

std::map<std::string, AuthorHistory> ReputationTable::histories() const {
  std::map<std::string, AuthorHistory> out;
  for (const auto& [author, entries] : entries_) {
    AuthorHistory h{author, {}};
    for (const auto& [_, karma] : entries) h.comment_karmas.push_back(karma);
    out.emplace(author, std::move(h));
  }
  return out;
}

double top_comment_rate(const std::vector<const Thread*>& threads,
                        const std::map<std::string, std::int64_t>& author_k, int n_top,
                        const KIndexOptions& opts, std::size_t* n_scored,
                        std::size_t* n_excluded) {
  if (n_top < 1) fail_config("n_top must be positive");
  std::size_t scored = 0, excluded = 0, hits = 0;
  for (const auto* t : threads) {
    std::set<std::string> participants;
    const Comment* top = nullptr;
    for (const auto& c : t->comments) {
      if (c.is_deleted || ReputationTable::is_anonymous(c.author)) continue;
      participants.insert(c.author);
      // Comments are time-ordered, so the earliest wins a karma tie.
      if (!top || c.karma > top->karma) top = &c;
    }
    if (opts.include_post_author && !ReputationTable::is_anonymous(t->author))
      participants.insert(t->author);
    if (!top || participants.size() < 2) {
      ++excluded;
      continue;
    }
    std::vector<std::int64_t> ks;
    for (const auto& p : participants) {
      auto it = author_k.find(p);
      ks.push_back(it == author_k.end() ? 0 : it->second);
    }
    std::sort(ks.begin(), ks.end(), std::greater<>());
    const auto threshold = ks[std::min<std::size_t>(static_cast<std::size_t>(n_top), ks.size()) - 1];
    auto it = author_k.find(top->author);
    const auto top_author_k = it == author_k.end() ? 0 : it->second;
    ++scored;
    if (top_author_k >= threshold) ++hits;
  }
  if (n_scored) *n_scored = scored;
  if (n_excluded) *n_excluded = excluded;
  return scored ? 100.0 * static_cast<double>(hits) / static_cast<double>(scored) : 0.0;
}

std::vector<KIndexRow> kindex_report(const CorpusStore& store, const KIndexOptions& opts) {
  std::vector<const Thread*> all;
  for (const auto& [_, threads] : store.by_subreddit())
    for (const auto& t : threads) all.push_back(&t);
  ReputationTable table(all);
  std::map<std::string, std::int64_t> author_k;
  for (const auto& [author, h] : table.histories()) author_k[author] = k_index(h);
  return kindex_report(store, author_k, opts);
}

std::vector<KIndexRow> kindex_report(const CorpusStore& store,
                                     const std::map<std::string, std::int64_t>& author_k,
                                     const KIndexOptions& opts) {
  std::vector<KIndexRow> rows;
  for (const auto& [sub, threads] : store.by_subreddit()) {
    std::vector<const Thread*> ptrs;
    for (const auto& t : threads) ptrs.push_back(&t);
    KIndexRow row;
    row.subreddit = sub;
    row.top1_pct = top_comment_rate(ptrs, author_k, 1, opts, &row.n_threads, &row.n_excluded);
    row.top3_pct = top_comment_rate(ptrs, author_k, 3, opts);
    rows.push_back(row);
  }
  return rows;
}

void write_kindex_csv(const std::vector<KIndexRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "subreddit,top1_pct,top3_pct,n_threads\n";
  for (const auto& r : rows)
    out << r.subreddit << ',' << format_fixed(r.top1_pct, 1) << ',' << format_fixed(r.top3_pct, 1)
        << ',' << r.n_threads << '\n';
}

}  // namespace karmarank
