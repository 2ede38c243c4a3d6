#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <json.hpp>

#include "karmarank/common.hpp"
#include "karmarank/pipeline.hpp"
#include "oracles.hpp"
#include "pipeline_fixtures.hpp"

using namespace karmarank;
namespace fs = std::filesystem;

namespace {

RunConfig small_run(const std::string& dir, int threads = 60) {
  auto cfg = fixture::fixture_run(dir);
  cfg.synth.threads = threads;
  cfg.synth.subreddits = {"askscience", "fitness"};
  return cfg;
}

void synth_and_run(const RunConfig& cfg) {
  Pipeline p(cfg);
  p.synth();
  p.run_all();
}

int cli(const std::string& args) {
  const int status = std::system((std::string(KARMARANK_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Numeric;
}

}  // namespace

TEST_CASE("config file grammar and overrides") {
  const auto path = oracle::temp_path("run.conf");
  oracle::write_file(path,
                     "# comment\n"
                     "inputs = a.jsonl, b.jsonl\n"
                     "\n"
                     "  list.length=8  \n"
                     "ranker.c_grid = 0.5,2\n"
                     "eval.gain = exponential\n"
                     "synth.signal = rel, GT=0.5\n");
  auto cfg = load_run_config(path);
  CHECK(cfg.inputs == std::vector<std::string>{"a.jsonl", "b.jsonl"});
  CHECK(cfg.lists.length == 8);
  CHECK(cfg.ranker.c_grid == std::vector<double>{0.5, 2});
  CHECK(cfg.gain == GainKind::Exponential);
  CHECK(cfg.synth.signal == std::map<std::string, double>{{"GT", 0.5}, {"REL", 1.0}});

  apply_override(cfg, "list.length = 12");
  CHECK(cfg.lists.length == 12);
  CHECK(get_config_value(cfg, "list.length") == "12");

  // The canonical text round-trips through the parser.
  const auto text_path = oracle::temp_path("canonical.conf");
  oracle::write_file(text_path, config_text(cfg));
  CHECK(config_text(load_run_config(text_path)) == config_text(cfg));
  const auto text = config_text(cfg);
  CHECK(config_keys().size() == static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));

  CHECK(kind_of([&] { apply_override(cfg, "no.such.key=1"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { apply_override(cfg, "list.length=ten"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { apply_override(cfg, "list.length"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { apply_override(cfg, "ranker.c_grid=1,-2"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { apply_override(cfg, "synth.signal=NOPE"); }) == ErrorKind::Config);
  oracle::write_file(path, "list.length 8\n");
  CHECK(kind_of([&] { load_run_config(path); }) == ErrorKind::Config);
  CHECK(kind_of([&] { load_run_config(path + ".missing"); }) == ErrorKind::Config);
}

TEST_CASE("stage config hashes cover only the stage's keys") {
  RunConfig a, b = a;
  b.lists.length = 8;
  CHECK(stage_config_hash(a, "lists") != stage_config_hash(b, "lists"));
  CHECK(stage_config_hash(a, "split") == stage_config_hash(b, "split"));
  b = a;
  b.seed = 2;
  for (const auto& s : {"lists", "split", "train-models", "train", "select", "evaluate"})
    CHECK(stage_config_hash(a, s) != stage_config_hash(b, s));
  CHECK(stage_config_hash(a, "featurize") == stage_config_hash(b, "featurize"));
  CHECK(kind_of([&] { stage_config_hash(a, "bogus"); }) == ErrorKind::Config);
  for (const auto& s : stage_names())
    for (const auto& u : stage_upstream(s)) CHECK(std::find(stage_names().begin(), stage_names().end(), u) != stage_names().end());
}

TEST_CASE("full run emits reports and manifests; stale state names the stage to rerun") {
  const auto dir = fixture::scratch_dir("pipeline_full");
  const auto cfg = small_run(dir);
  Pipeline p(cfg);

  CHECK_THROWS_WITH_AS(p.lists(), doctest::Contains("karmarank ingest"), Error);

  p.synth();
  p.run_all();
  for (const auto* r : fixture::kReports) CHECK(fs::exists(p.path(r)));
  CHECK(fs::exists(p.path("reports/kindex.csv")));
  for (const auto& s : stage_names())
    if (std::string(s) != "synth") {
      CHECK(fs::exists(p.path("manifests/" + s + ".json")));
      CHECK_NOTHROW(p.validate(s));
    }

  // One line per subreddit plus header and summary row.
  std::ifstream p1(p.path("reports/report_p1.csv"));
  int lines = 0;
  for (std::string l; std::getline(p1, l);) ++lines;
  CHECK(lines == 4);

  std::ifstream mf(p.path("manifests/train-models.json"));
  const auto m = nlohmann::json::parse(mf);
  CHECK(m.at("notes").get<std::string>().find("train part only") != std::string::npos);
  CHECK(m.at("upstream").contains("split"));
  CHECK(m.at("config").at("seed") == "7");

  std::ifstream im(p.path("manifests/ingest.json"));
  const auto ingest = nlohmann::json::parse(im);
  CHECK(ingest.at("inputs").at(0).at("hash") == hash_file(cfg.synth_output));

  auto changed = cfg;
  changed.lists.length = 8;
  Pipeline q(changed);
  CHECK_THROWS_WITH_AS(q.validate("evaluate"), doctest::Contains("rerun `karmarank lists`"), Error);
  CHECK_THROWS_WITH_AS(q.featurize(), doctest::Contains("rerun `karmarank lists`"), Error);

  // Each tampering is undone before the next.
  auto tamper = [&](const std::string& file, const std::function<void()>& check) {
    const auto saved = fixture::slurp(file);
    {
      std::ofstream f(file, std::ios::app);
      f << "\n";
    }
    check();
    std::ofstream(file, std::ios::binary) << saved;
    CHECK_NOTHROW(p.validate("evaluate"));
  };
  tamper(p.path("split.json"),
         [&] { CHECK_THROWS_WITH_AS(p.train(), doctest::Contains("rerun `karmarank split`"), Error); });
  tamper(cfg.synth_output,
         [&] { CHECK_THROWS_WITH_AS(p.evaluate(), doctest::Contains("rerun `karmarank ingest`"), Error); });
  tamper(p.path("manifests/select.json"),
         [&] { CHECK_THROWS_WITH_AS(p.validate("evaluate"), doctest::Contains("rerun `karmarank evaluate`"), Error); });

  fs::rename(p.path("manifests/select.json"), p.path("select.json.bak"));
  CHECK_THROWS_WITH_AS(p.evaluate(), doctest::Contains("run `karmarank select` first"), Error);
  fs::rename(p.path("select.json.bak"), p.path("manifests/select.json"));
  CHECK_NOTHROW(p.validate("evaluate"));

  // An identical rerun leaves downstream stages valid; a changed one does not.
  p.lists();
  CHECK_NOTHROW(p.validate("evaluate"));
  q.lists();
  CHECK_THROWS_WITH_AS(q.validate("split"), doctest::Contains("older than its upstream stage 'lists'"), Error);
  CHECK_THROWS_WITH_AS(q.validate("split"), doctest::Contains("rerun `karmarank split`"), Error);
}

TEST_CASE("identical config reruns produce byte-identical reports") {
  const auto a = fixture::scratch_dir("pipeline_det_a");
  const auto b = fixture::scratch_dir("pipeline_det_b");
  synth_and_run(small_run(a));
  synth_and_run(small_run(b));
  for (const auto* r : fixture::kReports) {
    const auto x = fixture::slurp(a + "/out/" + r);
    CHECK(!x.empty());
    CHECK(x == fixture::slurp(b + "/out/" + r));
  }
  CHECK(fixture::slurp(a + "/out/reports/kindex.csv") == fixture::slurp(b + "/out/reports/kindex.csv"));

  // A different root seed gives a different sample.
  const auto c = fixture::scratch_dir("pipeline_det_c");
  auto other = small_run(c);
  other.seed = 8;
  synth_and_run(other);
  CHECK(fixture::slurp(a + "/out/reports/report_p1.csv") != fixture::slurp(c + "/out/reports/report_p1.csv"));
}

TEST_CASE("planted REL signal is selected first") {
  const auto dir = fixture::scratch_dir("pipeline_rel");
  auto cfg = small_run(dir, 200);
  cfg.synth.signal = {{"REL", 1.0}};
  Pipeline p(cfg);
  p.synth();
  for (const auto* s : {"ingest", "lists", "split", "train-models", "featurize", "select"}) p.run(s);
  for (const auto& sub : cfg.synth.subreddits) {
    std::ifstream trace(p.path("select/" + sub + ".trace.csv"));
    std::string header, first;
    std::getline(trace, header);
    std::getline(trace, first);
    CHECK(header == "step,added,validation_p1,C,selected");
    CHECK(first.rfind("1,REL,", 0) == 0);
  }
}

TEST_CASE("command line exit codes") {
  const auto dir = fixture::scratch_dir("pipeline_cli");
  const auto conf = fixture::fixture_conf();
  CHECK(cli("--help") == 0);
  CHECK(cli("") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("lists -c " + conf + " -s no.such=1 -o " + dir) == 2);
  CHECK(cli("lists -c " + conf + " -o " + dir) == 3);
  CHECK(cli("synth -c " + conf + " --threads 12 --signal-group GT --output " + dir + "/d.jsonl -o " + dir) == 0);
  CHECK(fs::exists(dir + "/d.jsonl"));
  CHECK(cli("synth -c " + conf + " --signal-group XYZ --output " + dir + "/e.jsonl") == 2);
  CHECK(cli("ingest " + dir + "/d.jsonl -c " + conf + " -o " + dir + "/out") == 0);
  CHECK(fs::exists(dir + "/out/manifests/ingest.json"));
  CHECK(cli("kindex-report --include-post-author -c " + conf + " -o " + dir + "/out -s inputs=" + dir + "/d.jsonl") == 0);
  CHECK(cli("lists -c " + conf + " -o " + dir + "/out") == 3);  // inputs differ from the ingested ones
}
