#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace karmarank {

enum class PosTag : std::uint8_t {
  Det,
  Noun,
  Verb,
  Adj,
  Adv,
  Pron1,
  Pron2,
  Pron3,
  Prep,
  Conj,
  Num,
  Other,
};
inline constexpr std::size_t kPosTagCount = 12;
const char* pos_tag_name(PosTag t);
PosTag parse_pos_tag(std::string_view name);

enum class PunctClass : std::uint8_t { Period, Comma, Exclamation, Question, Quote, Other };
inline constexpr std::size_t kPunctClassCount = 6;
const char* punct_class_name(PunctClass p);

enum class TokenKind : std::uint8_t { Word, Number, Url, Punct };

inline constexpr const char* kUrlToken = "<URL>";

struct TokenizedComment {
  std::vector<std::string> tokens;   // lowercased; URLs replaced by <URL>
  std::vector<std::string> surface;  // original casing, aligned with tokens
  std::vector<TokenKind> kinds;
  std::vector<PosTag> tags;
  std::vector<std::pair<std::size_t, std::size_t>> sentences;  // [begin, end) token spans
  int urls = 0;
  std::array<int, kPunctClassCount> punct_counts{};

  std::size_t size() const { return tokens.size(); }
  // Tokens that are not punctuation (words, numbers, the URL sentinel).
  std::vector<std::string> content_tokens() const;
  std::vector<std::string> sentence_tokens(std::size_t s) const;
};

// Plain-text resources loaded from the data directory.
struct TextResources {
  std::unordered_set<std::string> stopwords;
  std::unordered_map<std::string, PosTag> pos_lexicon;
  std::vector<std::tuple<std::string, PosTag, std::size_t>> suffix_rules;  // longest first
  std::unordered_map<std::string, double> sentiment;
  std::unordered_set<std::string> negators;

  static TextResources load(const std::string& data_dir);
};

// Reads "entry[<TAB>weight]" lines; '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> read_entry_file(const std::string& path);
std::vector<std::string> read_word_list(const std::string& path);

// Default location of the bundled data directory.
std::string default_data_dir();

class TextAnalyzer {
 public:
  explicit TextAnalyzer(TextResources res) : res_(std::move(res)) {}

  TokenizedComment tokenize(std::string_view body) const;
  PosTag tag_word(const std::string& lower) const;
  // Capitalized, not all-caps, not sentence-initial, not a stopword.
  int entity_count(const TokenizedComment& tc) const;
  const TextResources& resources() const { return res_; }

 private:
  TextResources res_;
};

std::array<int, kPosTagCount> pos_counts(const TokenizedComment& tc);

std::string join_ngram(const std::vector<std::string>& tokens, std::size_t begin, std::size_t n);

// N-gram counts (n = 1..3) over content tokens of the training split.
class NgramBackground {
 public:
  void add(const std::vector<std::string>& content_tokens);
  void add(const TokenizedComment& tc) { add(tc.content_tokens()); }
  bool contains(std::size_t n, const std::string& key) const;
  std::size_t vocab_size() const { return counts_[0].size(); }
  std::uint64_t total(std::size_t n) const { return totals_.at(n - 1); }

  void save(const std::string& path) const;
  static NgramBackground load(const std::string& path);

 private:
  std::array<std::unordered_map<std::string, std::uint64_t>, 3> counts_;
  std::array<std::uint64_t, 3> totals_{};
};

// Fraction of the comment's n-grams absent from the background, n = 1, 2, 3.
// A comment with fewer than n content tokens scores 0 for that n.
std::array<double, 3> unseen_fraction(const TokenizedComment& tc, const NgramBackground& bg);

}  // namespace karmarank
