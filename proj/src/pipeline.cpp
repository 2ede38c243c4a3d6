#include "karmarank/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "karmarank/common.hpp"
#include "karmarank/reputation.hpp"

namespace karmarank {

using nlohmann::json;
namespace fs = std::filesystem;

std::string RunConfig::resolved_data_dir() const { return data_dir.empty() ? default_data_dir() : data_dir; }

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& p : split(v, ',')) {
    auto t = trim(p);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) fail_config("config key " + key + ": '" + v + "' is not a number");
  return d;
}

long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) fail_config("config key " + key + ": '" + v + "' is not an integer");
  return n;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail_config("config key " + key + ": '" + v + "' is not a boolean");
}

struct Key {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define KR_INT(NAME, FIELD)                                                                               \
  Key {                                                                                                   \
    NAME, [](const RunConfig& c) { return std::to_string(c.FIELD); },                                     \
        [](RunConfig& c, const std::string& v) { c.FIELD = static_cast<decltype(c.FIELD)>(parse_integer(NAME, v)); } \
  }
#define KR_REAL(NAME, FIELD)                                                    \
  Key {                                                                         \
    NAME, [](const RunConfig& c) { return format_double(c.FIELD); },            \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_real(NAME, v); } \
  }
#define KR_FLAG(NAME, FIELD)                                                    \
  Key {                                                                         \
    NAME, [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_flag(NAME, v); } \
  }
#define KR_TEXT(NAME, FIELD) \
  Key { NAME, [](const RunConfig& c) { return c.FIELD; }, [](RunConfig& c, const std::string& v) { c.FIELD = v; } }
#define KR_LIST(NAME, FIELD)                                                    \
  Key {                                                                         \
    NAME, [](const RunConfig& c) { return join(c.FIELD); },                     \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_list(v); }     \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys{
      KR_LIST("inputs", inputs),
      KR_TEXT("input_schema", input_schema),
      KR_LIST("subreddits", subreddits),
      KR_TEXT("out_dir", out_dir),
      KR_TEXT("data_dir", data_dir),
      KR_INT("seed", seed),
      KR_INT("list.length", lists.length),
      KR_INT("list.max_window", lists.max_window_seconds),
      KR_INT("list.stride", lists.stride),
      KR_INT("list.max_per_thread", lists.max_lists_per_thread),
      KR_REAL("split.train", train_frac),
      KR_REAL("split.validation", val_frac),
      KR_INT("embed.dim", models.skipgram.dim),
      KR_INT("embed.window", models.skipgram.window),
      KR_INT("embed.negatives", models.skipgram.negatives),
      KR_INT("embed.epochs", models.skipgram.epochs),
      KR_INT("embed.min_count", models.skipgram.min_count),
      KR_REAL("embed.alpha", models.skipgram.alpha),
      KR_FLAG("embed.normalize_before_average", models.skipgram.normalize_before_average),
      KR_INT("nmf.rank", models.nmf.rank),
      KR_INT("nmf.iterations", models.nmf.iterations),
      KR_INT("nmf.fold_in_iterations", models.nmf.fold_in_iterations),
      KR_INT("nmf.min_df", models.nmf.min_df),
      KR_INT("bow.epochs", models.bow.epochs),
      KR_REAL("bow.l2", models.bow.l2),
      KR_INT("bow.min_df", models.bow.min_df),
      KR_INT("bow.min_class", models.bow.min_class_examples),
      KR_INT("wordlist.budget", models.expansion.budget),
      KR_REAL("wordlist.C", models.expansion.C),
      KR_INT("wordlist.epochs", models.expansion.epochs),
      KR_INT("flair.top_k", models.flair_top_k),
      KR_FLAG("community.uniform_prior", models.community_uniform_prior),
      Key{"ranker.c_grid",
          [](const RunConfig& c) {
            std::vector<std::string> s;
            for (double x : c.ranker.c_grid) s.push_back(format_double(x));
            return join(s);
          },
          [](RunConfig& c, const std::string& v) {
            c.ranker.c_grid.clear();
            for (const auto& x : parse_list(v)) {
              const double d = parse_real("ranker.c_grid", x);
              if (!(d > 0)) fail_config("config key ranker.c_grid: values must be positive");
              c.ranker.c_grid.push_back(d);
            }
            if (c.ranker.c_grid.empty()) fail_config("config key ranker.c_grid is empty");
          }},
      KR_INT("ranker.epochs", ranker.svm.epochs),
      KR_REAL("surrogate.positive_min", surrogate.positive_min_karma),
      KR_REAL("surrogate.negative_max", surrogate.negative_max_karma),
      KR_REAL("surrogate.high_quantile", surrogate.high_quantile),
      KR_REAL("surrogate.mid_low", surrogate.mid_low_quantile),
      KR_REAL("surrogate.mid_high", surrogate.mid_high_quantile),
      KR_INT("surrogate.min_class", surrogate.min_class),
      KR_FLAG("surrogate.shuffle_labels", surrogate.shuffle_labels),
      Key{"eval.gain", [](const RunConfig& c) { return std::string(gain_name(c.gain)); },
          [](RunConfig& c, const std::string& v) { c.gain = parse_gain(v); }},
      KR_INT("eval.random_repetitions", random_repetitions),
      KR_FLAG("kindex.include_post_author", kindex_include_post_author),
      KR_INT("synth.threads", synth.threads),
      KR_INT("synth.min_comments", synth.min_comments),
      KR_INT("synth.max_comments", synth.max_comments),
      KR_LIST("synth.subreddits", synth.subreddits),
      Key{"synth.signal",
          [](const RunConfig& c) {
            std::vector<std::string> s;
            for (const auto& [g, w] : c.synth.signal) s.push_back(g + "=" + format_double(w));
            return join(s);
          },
          [](RunConfig& c, const std::string& v) {
            c.synth.signal.clear();
            for (const auto& spec : parse_list(v)) c.synth.signal.insert(parse_signal(spec));
          }},
      KR_REAL("synth.noise_sd", synth.noise_sd),
      KR_INT("synth.karma_offset", synth.karma_offset),
      KR_REAL("synth.deleted_rate", synth.deleted_rate),
      KR_TEXT("synth.output", synth_output),
  };
  return keys;
}

#undef KR_INT
#undef KR_REAL
#undef KR_FLAG
#undef KR_TEXT
#undef KR_LIST

const Key& find_key(const std::string& name) {
  for (const auto& k : key_table())
    if (k.name == name) return k;
  fail_config("unknown config key '" + name + "'");
}

// Config keys (exact or "prefix.") each stage depends on.
const std::map<std::string, std::vector<std::string>>& stage_keys() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"synth", {"seed", "data_dir", "synth."}},
      {"ingest", {"inputs", "input_schema", "subreddits"}},
      {"lists", {"seed", "list."}},
      {"split", {"seed", "split."}},
      {"train-models",
       {"seed", "data_dir", "embed.", "nmf.", "bow.", "wordlist.", "flair.", "community."}},
      {"featurize", {"data_dir"}},
      {"train", {"seed", "ranker."}},
      {"select", {"seed", "ranker."}},
      {"evaluate", {"seed", "ranker.", "surrogate.", "eval."}},
      {"kindex-report", {"kindex."}},
  };
  return m;
}

bool key_in_stage(const std::string& key, const std::string& stage) {
  for (const auto& p : stage_keys().at(stage))
    if (p.back() == '.' ? key.rfind(p, 0) == 0 : key == p) return true;
  return false;
}

std::string manifest_rel(const std::string& stage) { return "manifests/" + stage + ".json"; }

std::vector<std::string> files_under(const fs::path& root, const std::string& rel_dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root / rel_dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string safe_name(const std::string& sub) {
  std::string s;
  for (char c : sub) s += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_';
  return s;
}

void log(const std::string& stage, const std::string& msg) { std::cerr << "[" << stage << "] " << msg << '\n'; }

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_key(key).get(cfg); }

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail_config("expected key=value, got '" + assignment + "'");
  set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_config("cannot read config file " + path);
  RunConfig cfg;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.find('=') == std::string::npos) fail_config(path + ":" + std::to_string(n) + ": expected key = value");
    apply_override(cfg, t);
  }
  return cfg;
}

std::string config_text(const RunConfig& cfg) {
  std::string s;
  for (const auto& k : key_table()) s += k.name + " = " + k.get(cfg) + "\n";
  return s;
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> s{"ingest", "lists",  "split",    "train-models",  "featurize",
                                          "train",  "select", "evaluate", "kindex-report", "synth"};
  return s;
}

const std::vector<std::string>& stage_upstream(const std::string& stage) {
  static const std::map<std::string, std::vector<std::string>> up{
      {"ingest", {}},
      {"lists", {"ingest"}},
      {"split", {"lists"}},
      {"train-models", {"ingest", "split"}},
      {"featurize", {"ingest", "lists", "split", "train-models"}},
      {"train", {"featurize"}},
      {"select", {"featurize"}},
      {"evaluate", {"featurize", "train", "select"}},
      {"kindex-report", {"ingest"}},
      {"synth", {}},
  };
  auto it = up.find(stage);
  if (it == up.end()) fail_config("unknown stage '" + stage + "'");
  return it->second;
}

std::string stage_config_hash(const RunConfig& cfg, const std::string& stage) {
  stage_upstream(stage);
  Fnv1a h;
  for (const auto& k : key_table())
    if (key_in_stage(k.name, stage)) {
      h.update(k.name);
      h.update("=");
      h.update(k.get(cfg));
      h.update("\n");
    }
  return h.hex();
}

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {}

std::string Pipeline::path(const std::string& relative) const { return (fs::path(cfg_.out_dir) / relative).string(); }

void Pipeline::write_manifest(const std::string& stage, const std::vector<std::string>& inputs,
                              const std::vector<std::string>& outputs, const std::string& notes) const {
  json j;
  j["format"] = "karmarank-manifest";
  j["version"] = 1;
  j["stage"] = stage;
  j["config_hash"] = stage_config_hash(cfg_, stage);
  json conf = json::object();
  for (const auto& k : key_table())
    if (key_in_stage(k.name, stage)) conf[k.name] = k.get(cfg_);
  j["config"] = conf;
  j["seed"] = cfg_.seed;
  json in = json::array();
  for (const auto& p : inputs) in.push_back({{"path", p}, {"hash", hash_file(p)}});
  j["inputs"] = in;
  json up = json::object();
  for (const auto& u : stage_upstream(stage)) up[u] = hash_file(path(manifest_rel(u)));
  j["upstream"] = up;
  json out = json::array();
  for (const auto& rel : outputs) out.push_back({{"path", rel}, {"hash", hash_file(path(rel))}});
  j["outputs"] = out;
  if (!notes.empty()) j["notes"] = notes;
  fs::create_directories(path("manifests"));
  std::ofstream f(path(manifest_rel(stage)));
  if (!f) fail_data("cannot write manifest for stage " + stage);
  f << j.dump(1) << '\n';
}

void Pipeline::validate(const std::string& stage) const {
  const std::string rerun = "; rerun `karmarank " + stage + "`";
  const auto mpath = path(manifest_rel(stage));
  std::ifstream in(mpath);
  if (!in) fail_data("missing manifest for stage '" + stage + "'; run `karmarank " + stage + "` first");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "karmarank-manifest") fail_data("unreadable manifest " + mpath + rerun);
  if (j.value("config_hash", "") != stage_config_hash(cfg_, stage))
    fail_data("stage '" + stage + "' ran with a different configuration" + rerun);
  for (const auto& i : j.at("inputs")) {
    const auto p = i.at("path").get<std::string>();
    if (!fs::exists(p) || hash_file(p) != i.at("hash").get<std::string>())
      fail_data("input " + p + " of stage '" + stage + "' is missing or changed" + rerun);
  }
  for (const auto& o : j.at("outputs")) {
    const auto p = path(o.at("path").get<std::string>());
    if (!fs::exists(p) || hash_file(p) != o.at("hash").get<std::string>())
      fail_data("output " + p + " of stage '" + stage + "' is missing or changed" + rerun);
  }
  for (const auto& u : stage_upstream(stage)) {
    validate(u);
    const auto& rec = j.at("upstream");
    if (!rec.contains(u) || rec.at(u).get<std::string>() != hash_file(path(manifest_rel(u))))
      fail_data("stage '" + stage + "' is older than its upstream stage '" + u + "'" + rerun);
  }
}

void Pipeline::require_upstream(const std::string& stage) const {
  for (const auto& u : stage_upstream(stage)) validate(u);
}

CorpusStore Pipeline::load_corpus() const { return load_store(path("corpus")); }

void Pipeline::synth() {
  SynthConfig sc = cfg_.synth;
  sc.seed = cfg_.seed;
  sc.data_dir = cfg_.resolved_data_dir();
  const auto corpus = generate_synth(sc);
  const fs::path out = cfg_.synth_output;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_reddit_dump(corpus.store, out.string());
  log("synth", std::to_string(corpus.store.thread_count()) + " threads, " +
                   std::to_string(corpus.store.comment_count()) + " comments -> " + out.string());
  // The dump lives outside out_dir; its manifest records the absolute path.
  json j = {{"format", "karmarank-manifest"},
            {"version", 1},
            {"stage", "synth"},
            {"config_hash", stage_config_hash(cfg_, "synth")},
            {"seed", cfg_.seed},
            {"outputs", json::array({{{"path", fs::absolute(out).string()}, {"hash", hash_file(out.string())}}})}};
  std::ofstream m(out.string() + ".manifest.json");
  m << j.dump(1) << '\n';
}

void Pipeline::ingest() {
  if (cfg_.inputs.empty()) fail_config("no input dumps configured (key 'inputs')");
  CorpusStore raw = ingest_dump(cfg_.inputs, cfg_.input_schema);
  CorpusStore store;
  store.stats = raw.stats;
  for (const auto& [sub, threads] : raw.by_subreddit()) {
    if (!cfg_.subreddits.empty() &&
        std::find(cfg_.subreddits.begin(), cfg_.subreddits.end(), sub) == cfg_.subreddits.end())
      continue;
    for (const auto& t : threads) store.add_thread(t);
  }
  if (store.thread_count() == 0) fail_data("no threads left after ingest");
  fs::create_directories(cfg_.out_dir);
  if (fs::exists(path("corpus"))) fs::remove_all(path("corpus"));
  save_store(store, path("corpus"));
  write_stats_csv(corpus_stats(store), path("stats.csv"));
  for (const auto& s : corpus_stats(store)) log("ingest", format_stats_row(s));
  log("ingest", std::to_string(store.stats.malformed) + " malformed lines, " +
                    std::to_string(store.stats.orphan_comments) + " orphan comments, " +
                    std::to_string(store.stats.reparented) + " reparented");
  auto outputs = files_under(cfg_.out_dir, "corpus");
  outputs.push_back("stats.csv");
  write_manifest("ingest", cfg_.inputs, outputs, "");
}

void Pipeline::lists() {
  require_upstream("lists");
  const auto store = load_corpus();
  const auto all = build_all_lists(store, cfg_.lists, derive_seed(cfg_.seed, "sampling"));
  save_lists(all, path("lists.tsv"));
  log("lists", std::to_string(all.size()) + " comment lists");
  write_manifest("lists", {}, {"lists.tsv"}, "");
}

void Pipeline::split() {
  require_upstream("split");
  const auto all = load_lists(path("lists.tsv"));
  const auto s = split_corpus(all, cfg_.train_frac, cfg_.val_frac, derive_seed(cfg_.seed, "split"));
  save_split(s, path("split.json"));
  log("split", std::to_string(s.train.size()) + " train, " + std::to_string(s.validation.size()) +
                   " validation, " + std::to_string(s.test.size()) + " test lists");
  write_manifest("split", {}, {"split.json"}, "");
}

void Pipeline::train_models() {
  require_upstream("train-models");
  const auto store = load_corpus();
  const auto s = load_split(path("split.json"));
  std::vector<const Thread*> fit;
  for (const auto& [thread, part] : s.thread_part)
    if (part == Part::Train) {
      const Thread* t = store.find_thread(thread);
      if (!t) fail_data("split names unknown thread " + thread + "; rerun `karmarank split`");
      fit.push_back(t);
    }
  ModelConfig mc = cfg_.models;
  mc.skipgram.seed = derive_seed(cfg_.seed, "embedding");
  mc.nmf.seed = derive_seed(cfg_.seed, "nmf");
  mc.bow.seed = derive_seed(cfg_.seed, "bow");
  mc.expansion.seed = derive_seed(cfg_.seed, "expansion");
  mc.seeds_dir = (fs::path(cfg_.resolved_data_dir()) / "seeds").string();
  auto analyzer = std::make_shared<const TextAnalyzer>(TextResources::load(cfg_.resolved_data_dir()));
  const auto models = karmarank::train_models(fit, analyzer, mc);
  if (fs::exists(path("models"))) fs::remove_all(path("models"));
  models.save(path("models"));
  log("train-models", "fit on " + std::to_string(fit.size()) + " training threads");
  write_manifest("train-models", {}, files_under(cfg_.out_dir, "models"),
                 "fit on the train part only: " + std::to_string(fit.size()) + " threads");
}

void Pipeline::featurize() {
  require_upstream("featurize");
  const auto store = load_corpus();
  const auto all = load_lists(path("lists.tsv"));
  const auto s = load_split(path("split.json"));
  auto analyzer = std::make_shared<const TextAnalyzer>(TextResources::load(cfg_.resolved_data_dir()));
  const auto models = ModelSet::load(path("models"), analyzer);
  FeatureExtractor fx(models);

  std::map<std::string, const CommentList*> by_id;
  for (const auto& l : all) by_id[l.id] = &l;
  auto part_lists = [&](Part p) {
    std::vector<CommentList> out;
    for (const auto& id : s.ids(p)) {
      auto it = by_id.find(id);
      if (it == by_id.end()) fail_data("split names unknown list " + id + "; rerun `karmarank split`");
      out.push_back(*it->second);
    }
    return out;
  };
  const auto raw_train = featurize_lists(part_lists(Part::Train), store, fx);
  const auto norm = fit_normalizer(raw_train);
  fs::create_directories(path("features"));
  norm.save(path("features/schema.json"));
  write_feature_tsv(norm.apply(raw_train), path("features/train.tsv"));
  write_feature_tsv(norm.apply(featurize_lists(part_lists(Part::Validation), store, fx)),
                    path("features/validation.tsv"));
  write_feature_tsv(norm.apply(featurize_lists(part_lists(Part::Test), store, fx)), path("features/test.tsv"));
  log("featurize", std::to_string(norm.output().size()) + " features kept, " + std::to_string(norm.dropped.size()) +
                       " dropped");
  write_manifest("featurize", {},
                 {"features/schema.json", "features/train.tsv", "features/validation.tsv", "features/test.tsv"}, "");
}

std::vector<std::string> Pipeline::feature_subreddits() const {
  return subreddits_of(read_feature_tsv(path("features/train.tsv")));
}

SubredditSplit Pipeline::subreddit_split(const std::string& sub) const {
  SubredditSplit d{filter_subreddit(read_feature_tsv(path("features/train.tsv")), sub),
                   filter_subreddit(read_feature_tsv(path("features/validation.tsv")), sub),
                   filter_subreddit(read_feature_tsv(path("features/test.tsv")), sub)};
  if (d.train.lists.empty() || d.validation.lists.empty())
    fail_data("subreddit " + sub + " has no training or validation lists; enlarge the corpus or the split");
  return d;
}

namespace {

RankerOptions seeded(const RankerOptions& r, std::uint64_t root) {
  RankerOptions o = r;
  o.svm.seed = derive_seed(root, "optimizer");
  return o;
}

}  // namespace

void Pipeline::train() {
  require_upstream("train");
  const auto opt = seeded(cfg_.ranker, cfg_.seed);
  std::vector<std::string> outputs;
  fs::create_directories(path("train"));
  for (const auto& sub : feature_subreddits()) {
    const auto d = subreddit_split(sub);
    const auto gt = train_gt_baseline(d, opt);
    auto all = tune_C(opt.c_grid, d.train, d.validation, opt.svm);
    all.model.selected_groups = d.train.schema.group_ids();
    const auto base = "train/" + safe_name(sub);
    gt.model.save(path(base + ".gt.json"));
    all.model.save(path(base + ".all.json"));
    outputs.push_back(base + ".gt.json");
    outputs.push_back(base + ".all.json");
    log("train", sub + ": G&T C=" + format_double(gt.C) + ", all C=" + format_double(all.C));
  }
  write_manifest("train", {}, outputs, "");
}

void Pipeline::select() {
  require_upstream("select");
  const auto opt = seeded(cfg_.ranker, cfg_.seed);
  std::vector<std::string> outputs;
  fs::create_directories(path("select"));
  for (const auto& sub : feature_subreddits()) {
    const auto d = subreddit_split(sub);
    const auto sel = select_groups(d, opt);
    const auto base = "select/" + safe_name(sub);
    sel.model.save(path(base + ".model.json"));
    std::ofstream trace(path(base + ".trace.csv"));
    trace << "step,added,validation_p1,C,selected\n";
    for (std::size_t i = 0; i < sel.trace.size(); ++i)
      trace << i + 1 << ',' << sel.trace[i].added << ',' << format_fixed(sel.trace[i].validation_p1, 6) << ','
            << format_double(sel.trace[i].C) << ',' << (i < sel.best_prefix ? 1 : 0) << '\n';
    trace.close();
    outputs.push_back(base + ".model.json");
    outputs.push_back(base + ".trace.csv");
    log("select", sub + ": " + join(sel.selected()) + " (validation P@1 " + format_fixed(sel.best_p1, 3) + ")");
  }
  write_manifest("select", {}, outputs, "");
}

void Pipeline::evaluate() {
  require_upstream("evaluate");
  const auto opt = seeded(cfg_.ranker, cfg_.seed);
  std::vector<SubredditReport> rows;
  for (const auto& sub : feature_subreddits()) {
    const auto d = subreddit_split(sub);
    if (d.test.lists.empty()) fail_data("subreddit " + sub + " has no test lists");
    const auto gt = RankModel::load(path("train/" + safe_name(sub) + ".gt.json"));
    const auto best = RankModel::load(path("select/" + safe_name(sub) + ".model.json"));
    SubredditReport r;
    r.subreddit = sub;
    std::vector<std::vector<double>> karmas;
    for (const auto& l : d.test.lists) karmas.push_back(l.karma);
    const auto rnd = random_baseline(karmas, cfg_.random_repetitions, derive_seed(cfg_.seed, "baseline/" + sub), cfg_.gain);
    r.p1_random = rnd.p_at_1;
    r.ndcg_random = rnd.ndcg;
    r.p1_gt = mean_p_at_1(gt, d.test);
    r.ndcg_gt = mean_ndcg(gt, d.test, cfg_.gain);
    r.p1_all = mean_p_at_1(best, d.test);
    r.ndcg_all = mean_ndcg(best, d.test, cfg_.gain);
    r.ranking = pairwise_accuracy(best, d.test).accuracy();

    // The balanced surrogates use the selected model's feature groups.
    SubredditSplit sel{d.train.select_groups(best.selected_groups), d.validation.select_groups(best.selected_groups),
                       d.test.select_groups(best.selected_groups)};
    SurrogateOptions so = cfg_.surrogate;
    so.seed = derive_seed(cfg_.seed, "surrogate/" + sub);
    r.pos_neg = balanced_surrogate(BalancedTask::PosNeg, sel, opt, so).accuracy;
    r.high_mid = balanced_surrogate(BalancedTask::HighMid, sel, opt, so).accuracy;
    r.ablation = group_ablation(d, r.p1_gt, opt);
    log("evaluate", sub + ": P@1 random " + format_fixed(r.p1_random, 3) + ", G&T " + format_fixed(r.p1_gt, 3) +
                        ", selected " + format_fixed(r.p1_all, 3));
    rows.push_back(std::move(r));
  }
  fs::create_directories(path("reports"));
  write_p1_report(rows, path("reports/report_p1.csv"));
  write_ndcg_report(rows, path("reports/report_ndcg.csv"));
  write_surrogate_report(rows, path("reports/report_surrogates.csv"));
  write_ablation_report(rows, path("reports/ablation_fig1.csv"));
  write_manifest("evaluate", {},
                 {"reports/report_p1.csv", "reports/report_ndcg.csv", "reports/report_surrogates.csv",
                  "reports/ablation_fig1.csv"},
                 "");
}

void Pipeline::kindex_report() {
  require_upstream("kindex-report");
  const auto store = load_corpus();
  KIndexOptions opts;
  opts.include_post_author = cfg_.kindex_include_post_author;
  const auto rows = karmarank::kindex_report(store, opts);
  fs::create_directories(path("reports"));
  write_kindex_csv(rows, path("reports/kindex.csv"));
  for (const auto& r : rows)
    log("kindex-report", r.subreddit + ": top1 " + format_fixed(r.top1_pct, 1) + "%, top3 " +
                             format_fixed(r.top3_pct, 1) + "%");
  write_manifest("kindex-report", {}, {"reports/kindex.csv"}, "");
}

void Pipeline::run(const std::string& stage) {
  static const std::map<std::string, void (Pipeline::*)()> table{
      {"ingest", &Pipeline::ingest},       {"lists", &Pipeline::lists},
      {"split", &Pipeline::split},         {"train-models", &Pipeline::train_models},
      {"featurize", &Pipeline::featurize}, {"train", &Pipeline::train},
      {"select", &Pipeline::select},       {"evaluate", &Pipeline::evaluate},
      {"kindex-report", &Pipeline::kindex_report}, {"synth", &Pipeline::synth},
  };
  auto it = table.find(stage);
  if (it == table.end()) fail_config("unknown stage '" + stage + "'");
  (this->*(it->second))();
}

void Pipeline::run_all() {
  for (const char* s : {"ingest", "lists", "split", "train-models", "featurize", "train", "select", "evaluate",
                        "kindex-report"})
    run(s);
}

}  // namespace karmarank
