#include "karmarank/textprep.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <tuple>

#include "karmarank/common.hpp"

#ifndef KARMARANK_DATA_DIR
#define KARMARANK_DATA_DIR "data"
#endif

namespace karmarank {

namespace {

constexpr const char* kTagNames[kPosTagCount] = {"DET",   "NOUN",  "VERB",  "ADJ",
                                                 "ADV",   "PRON1", "PRON2", "PRON3",
                                                 "PREP",  "CONJ",  "NUM",   "OTHER"};

bool is_ascii_alnum(unsigned char c) { return std::isalnum(c) != 0; }
bool is_word_byte(unsigned char c) { return c >= 0x80 || is_ascii_alnum(c); }
bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  return true;
}

// U+2018, U+2019, U+201C, U+201D
bool is_curly_quote(std::string_view s, std::size_t i) {
  return i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
         static_cast<unsigned char>(s[i + 1]) == 0x80 &&
         (static_cast<unsigned char>(s[i + 2]) == 0x98 || static_cast<unsigned char>(s[i + 2]) == 0x99 ||
          static_cast<unsigned char>(s[i + 2]) == 0x9C || static_cast<unsigned char>(s[i + 2]) == 0x9D);
}

PunctClass classify_punct(char c) {
  switch (c) {
    case '.': return PunctClass::Period;
    case ',': return PunctClass::Comma;
    case '!': return PunctClass::Exclamation;
    case '?': return PunctClass::Question;
    case '"':
    case '\'':
    case '`': return PunctClass::Quote;
    default: return PunctClass::Other;
  }
}

bool is_terminator(const std::string& tok) { return tok == "." || tok == "!" || tok == "?"; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

const char* pos_tag_name(PosTag t) { return kTagNames[static_cast<std::size_t>(t)]; }

PosTag parse_pos_tag(std::string_view name) {
  for (std::size_t i = 0; i < kPosTagCount; ++i)
    if (name == kTagNames[i]) return static_cast<PosTag>(i);
  fail_config("unknown POS tag '" + std::string(name) + "'");
}

const char* punct_class_name(PunctClass p) {
  constexpr const char* names[kPunctClassCount] = {"period",   "comma", "exclamation",
                                                   "question", "quote", "other"};
  return names[static_cast<std::size_t>(p)];
}

std::vector<std::string> TokenizedComment::content_tokens() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (kinds[i] != TokenKind::Punct) out.push_back(tokens[i]);
  return out;
}

std::vector<std::string> TokenizedComment::sentence_tokens(std::size_t s) const {
  const auto [b, e] = sentences.at(s);
  return {tokens.begin() + static_cast<std::ptrdiff_t>(b), tokens.begin() + static_cast<std::ptrdiff_t>(e)};
}

std::vector<std::pair<std::string, std::string>> read_entry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read resource file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      out.emplace_back(trim(line), std::string{});
    else
      out.emplace_back(trim(line.substr(0, tab)), trim(line.substr(tab + 1)));
  }
  return out;
}

std::vector<std::string> read_word_list(const std::string& path) {
  std::vector<std::string> out;
  for (auto& [w, _] : read_entry_file(path))
    if (!w.empty()) out.push_back(lower(w));
  return out;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("KARMARANK_DATA_DIR"); env && *env) return env;
  return KARMARANK_DATA_DIR;
}

TextResources TextResources::load(const std::string& data_dir) {
  TextResources r;
  for (auto& w : read_word_list(data_dir + "/stopwords.txt")) r.stopwords.insert(w);
  for (auto& [w, tag] : read_entry_file(data_dir + "/pos_lexicon.tsv"))
    r.pos_lexicon.emplace(lower(w), parse_pos_tag(tag));
  for (auto& [suffix, rest] : read_entry_file(data_dir + "/suffix_rules.tsv")) {
    auto fields = split(rest, '\t');
    if (fields.size() != 2) fail_data("bad suffix rule for '" + suffix + "'");
    r.suffix_rules.emplace_back(suffix, parse_pos_tag(fields[0]),
                                static_cast<std::size_t>(std::stoul(fields[1])));
  }
  std::stable_sort(r.suffix_rules.begin(), r.suffix_rules.end(), [](const auto& a, const auto& b) {
    return std::get<0>(a).size() > std::get<0>(b).size();
  });
  for (auto& [w, weight] : read_entry_file(data_dir + "/sentiment.tsv"))
    r.sentiment[lower(w)] = std::clamp(std::stod(weight), -1.0, 1.0);
  for (auto& w : read_word_list(data_dir + "/negators.txt")) r.negators.insert(w);
  return r;
}

PosTag TextAnalyzer::tag_word(const std::string& w) const {
  if (auto it = res_.pos_lexicon.find(w); it != res_.pos_lexicon.end()) return it->second;
  for (const auto& [suffix, tag, min_len] : res_.suffix_rules)
    if (w.size() >= min_len && w.size() > suffix.size() &&
        w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0)
      return tag;
  return PosTag::Noun;
}

TokenizedComment TextAnalyzer::tokenize(std::string_view body) const {
  TokenizedComment tc;
  auto emit = [&](std::string surface, TokenKind kind) {
    std::string tok = kind == TokenKind::Url ? std::string(kUrlToken) : lower(surface);
    PosTag tag = PosTag::Other;
    if (kind == TokenKind::Number) tag = PosTag::Num;
    if (kind == TokenKind::Word) tag = tag_word(tok);
    if (kind == TokenKind::Url) ++tc.urls;
    tc.tokens.push_back(std::move(tok));
    tc.surface.push_back(std::move(surface));
    tc.kinds.push_back(kind);
    tc.tags.push_back(tag);
  };
  auto emit_punct = [&](std::string_view s, PunctClass cls) {
    ++tc.punct_counts[static_cast<std::size_t>(cls)];
    emit(std::string(s), TokenKind::Punct);
  };

  std::size_t i = 0;
  const std::size_t n = body.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(body[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    const bool at_token_start = i == 0 || is_space(static_cast<unsigned char>(body[i - 1])) ||
                                body[i - 1] == '(' || body[i - 1] == '<';
    if (at_token_start && (starts_with_ci(body.substr(i), "http://") ||
                           starts_with_ci(body.substr(i), "https://") ||
                           starts_with_ci(body.substr(i), "www."))) {
      std::size_t e = i;
      while (e < n && !is_space(static_cast<unsigned char>(body[e]))) ++e;
      std::size_t url_end = e;
      while (url_end > i && std::string_view(".,!?;:)]'\">").find(body[url_end - 1]) != std::string_view::npos)
        --url_end;
      emit(std::string(body.substr(i, url_end - i)), TokenKind::Url);
      for (std::size_t k = url_end; k < e; ++k) emit_punct(body.substr(k, 1), classify_punct(body[k]));
      i = e;
      continue;
    }
    if (is_curly_quote(body, i)) {
      emit_punct(body.substr(i, 3), PunctClass::Quote);
      i += 3;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t e = i;
      while (e < n) {
        const auto b = static_cast<unsigned char>(body[e]);
        if (is_curly_quote(body, e)) break;
        if (is_word_byte(b)) {
          ++e;
        } else if ((b == '\'' || b == '-') && e + 1 < n &&
                   is_word_byte(static_cast<unsigned char>(body[e + 1])) && !is_curly_quote(body, e + 1)) {
          e += 2;  // apostrophe or hyphen inside a word
        } else {
          break;
        }
      }
      std::string surface(body.substr(i, e - i));
      bool numeric = std::isdigit(c) != 0;
      emit(std::move(surface), numeric ? TokenKind::Number : TokenKind::Word);
      i = e;
      continue;
    }
    emit_punct(body.substr(i, 1), classify_punct(body[i]));
    ++i;
  }

  std::size_t begin = 0;
  for (std::size_t k = 0; k < tc.tokens.size(); ++k) {
    const bool term = tc.kinds[k] == TokenKind::Punct && is_terminator(tc.tokens[k]);
    const bool next_term = k + 1 < tc.tokens.size() && tc.kinds[k + 1] == TokenKind::Punct &&
                           is_terminator(tc.tokens[k + 1]);
    if (term && !next_term) {
      tc.sentences.emplace_back(begin, k + 1);
      begin = k + 1;
    }
  }
  if (begin < tc.tokens.size()) tc.sentences.emplace_back(begin, tc.tokens.size());
  return tc;
}

int TextAnalyzer::entity_count(const TokenizedComment& tc) const {
  int count = 0;
  for (const auto& [b, e] : tc.sentences) {
    bool first_word = true;
    for (std::size_t k = b; k < e; ++k) {
      if (tc.kinds[k] != TokenKind::Word) continue;
      const bool initial = first_word;
      first_word = false;
      if (initial) continue;
      const auto& s = tc.surface[k];
      if (!std::isupper(static_cast<unsigned char>(s[0]))) continue;
      const bool has_lower = std::any_of(s.begin(), s.end(), [](unsigned char ch) { return std::islower(ch); });
      if (!has_lower) continue;
      if (res_.stopwords.count(tc.tokens[k])) continue;
      ++count;
    }
  }
  return count;
}

std::array<int, kPosTagCount> pos_counts(const TokenizedComment& tc) {
  std::array<int, kPosTagCount> counts{};
  for (auto t : tc.tags) ++counts[static_cast<std::size_t>(t)];
  return counts;
}

std::string join_ngram(const std::vector<std::string>& tokens, std::size_t begin, std::size_t n) {
  std::string key = tokens[begin];
  for (std::size_t k = 1; k < n; ++k) {
    key.push_back('\x1f');
    key += tokens[begin + k];
  }
  return key;
}

void NgramBackground::add(const std::vector<std::string>& toks) {
  for (std::size_t n = 1; n <= 3; ++n) {
    if (toks.size() < n) break;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      ++counts_[n - 1][join_ngram(toks, i, n)];
      ++totals_[n - 1];
    }
  }
}

bool NgramBackground::contains(std::size_t n, const std::string& key) const {
  return counts_.at(n - 1).count(key) > 0;
}

void NgramBackground::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << "karmarank-ngrams\t1\n";
  for (std::size_t n = 1; n <= 3; ++n) {
    std::vector<std::pair<std::string, std::uint64_t>> entries(counts_[n - 1].begin(), counts_[n - 1].end());
    std::sort(entries.begin(), entries.end());
    for (const auto& [k, c] : entries) out << n << '\t' << c << '\t' << k << '\n';
  }
}

NgramBackground NgramBackground::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "karmarank-ngrams\t1") fail_data("unsupported n-gram file " + path);
  NgramBackground bg;
  while (std::getline(in, line)) {
    auto t1 = line.find('\t');
    auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) fail_data("bad n-gram line in " + path);
    const auto n = std::stoul(line.substr(0, t1));
    const auto c = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
    if (n < 1 || n > 3) fail_data("bad n-gram order in " + path);
    bg.counts_[n - 1][line.substr(t2 + 1)] = c;
    bg.totals_[n - 1] += c;
  }
  return bg;
}

std::array<double, 3> unseen_fraction(const TokenizedComment& tc, const NgramBackground& bg) {
  std::array<double, 3> out{};
  const auto toks = tc.content_tokens();
  for (std::size_t n = 1; n <= 3; ++n) {
    if (toks.size() < n) continue;
    std::size_t total = 0, unseen = 0;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      ++total;
      if (!bg.contains(n, join_ngram(toks, i, n))) ++unseen;
    }
    out[n - 1] = static_cast<double>(unseen) / static_cast<double>(total);
  }
  return out;
}

}  // namespace karmarank
