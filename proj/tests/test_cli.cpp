#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "hmmrf/serialization.hpp"
#include "oracles.hpp"

using namespace hmmrf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the tool with stderr folded into the captured output.
Run run(const std::string& args) {
  const std::string cmd = std::string(HMMRF_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

const std::string kSmallCorpus = "--families 3 --samples 24 --states 3 --symbols 20 --len 80:140 --seed 5";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run("").code == 2);
    CHECK(run("gen-corpus").code == 2);
    CHECK(run("gen-corpus --len 300 --out /tmp/never").code == 2);
    CHECK(run("train --corpus x --out y --criterion bogus").code == 2);
    CHECK(run("grid --corpus x --out y --L 10,,20").code == 2);
    CHECK(run("--help").code == 0);
  }

  TEST_CASE("gen-corpus writes a reproducible corpus") {
    oracle::TempDir dir("cli_gen");
    const Run a = run("gen-corpus " + kSmallCorpus + " --short-samples 2 --out " + (dir.path() / "a").string());
    REQUIRE(a.code == 0);
    CHECK(a.out.find("3 families") != std::string::npos);
    CHECK(fs::exists(dir.path() / "a" / "_planted.json"));
    CHECK(fs::exists(dir.path() / "a" / "family_02"));
    const json manifest = read_json(dir.path() / "a" / "_manifest.json");
    CHECK(manifest["command"] == "gen-corpus");
    CHECK(manifest["seed"] == 5);

    REQUIRE(run("gen-corpus " + kSmallCorpus + " --short-samples 2 --out " + (dir.path() / "b").string()).code == 0);
    CHECK(corpus_fingerprint(dir.path() / "a") == corpus_fingerprint(dir.path() / "b"));
    CHECK(manifest["corpus"]["fingerprint"] == corpus_fingerprint(dir.path() / "a"));

    CHECK(run("gen-corpus --separation 1.5 --out " + (dir.path() / "c").string()).code == 1);
  }

  TEST_CASE("train, classify and eval") {
    oracle::TempDir dir("cli_train");
    const std::string corpus = (dir.path() / "corpus").string();
    REQUIRE(run("gen-corpus " + kSmallCorpus + " --short-samples 2 --short-length 10 --out " + corpus).code == 0);

    const fs::path model = dir.path() / "out" / "model.json";
    const std::string common = " --corpus " + corpus + " --min-samples 10 --states 3 --trees 20 --L 40";
    const Run t = run("train" + common + " --out " + model.string());
    REQUIRE_MESSAGE(t.code == 0, t.out);
    CHECK(t.out.find("accuracy") != std::string::npos);
    CHECK(classifier_from_json(read_json(model)).index() == 0);
    CHECK(read_json(dir.path() / "out" / "model.manifest.json")["command"] == "train");
    CHECK(read_json(dir.path() / "out" / "model.report.json").contains("weighted_f1"));
    const auto dropped = lines_of(read_text(dir.path() / "out" / "dropped.csv"));
    REQUIRE(dropped.size() == 3);
    CHECK(dropped[1].find("short") != std::string::npos);

    SUBCASE("raw baseline") {
      const fs::path raw = dir.path() / "raw" / "model.json";
      REQUIRE(run("train" + common + " --baseline raw --out " + raw.string()).code == 0);
      CHECK(read_json(raw)["kind"] == "raw-rf");
    }

    SUBCASE("L beyond every sample") {
      const Run r = run("train --corpus " + corpus + " --min-samples 10 --L 100000 --out " +
                        (dir.path() / "huge" / "m.json").string());
      CHECK(r.code == 1);
      CHECK(r.out.find("splitting corpus") != std::string::npos);
    }

    SUBCASE("classify") {
      const fs::path short_file = dir.path() / "short.opseq";
      std::ofstream(short_file) << "MOV\nPUSH\n";
      const Run c = run("classify --json --model " + model.string() + " " + short_file.string() + " " + corpus +
                        "/family_01");
      CHECK(c.code == 1);
      const auto lines = lines_of(c.out);
      REQUIRE(lines.size() >= 2);
      const json bad = json::parse(lines[0]);
      CHECK(bad["file"] == short_file.string());
      CHECK(bad.contains("error"));
      std::size_t labelled = 0;
      std::size_t errors = 0;
      for (std::size_t i = 1; i < lines.size(); ++i) {
        const json j = json::parse(lines[i]);
        if (j.contains("error")) {
          ++errors;  // generated short samples
        } else if (j["votes"].size() == 3) {
          ++labelled;
        }
      }
      CHECK(labelled == 24);
      CHECK(errors + labelled == lines.size() - 1);

      const Run ok = run("classify --model " + model.string() + " " + corpus + "/family_00/sample_0000.opseq");
      CHECK(ok.code == 0);
      CHECK(ok.out.find("family_") != std::string::npos);
    }

    SUBCASE("eval") {
      const fs::path report = dir.path() / "eval" / "report.json";
      const Run e = run("eval --model " + model.string() + " --corpus " + corpus + " --out " + report.string());
      REQUIRE_MESSAGE(e.code == 0, e.out);
      const json j = read_json(report);
      for (const char* key : {"accuracy", "weighted_f1", "confusion", "scaled_confusion", "per_class"}) {
        CHECK(j.contains(key));
      }
      // 72 long samples; the two short ones are listed, not scored
      CHECK(report_from_json(j).confusion.total() == 72);
      CHECK(lines_of(read_text(dir.path() / "eval" / "dropped.csv")).size() == 3);
      CHECK(fs::exists(dir.path() / "eval" / "report.manifest.json"));

      fs::create_directories(dir.path() / "empty");
      CHECK(run("eval --model " + model.string() + " --corpus " + (dir.path() / "empty").string() + " --out " +
                (dir.path() / "e2" / "r.json").string())
                .code == 1);
    }

    SUBCASE("grid") {
      const fs::path out = dir.path() / "grid";
      const Run g = run("grid" + std::string(" --corpus ") + corpus +
                        " --min-samples 10 --states 3 --L 20,40 --trees 5,10 --criterion gini --max-features sqrt"
                        " --out " + out.string());
      REQUIRE_MESSAGE(g.code == 0, g.out);
      CHECK(g.out.find("best cell") != std::string::npos);
      const auto rows = lines_of(read_text(out / "results.csv"));
      CHECK(rows.size() == 5);
      for (const char* f : {"best_model.json", "best_report.json", "manifest.json", "dropped.csv", "sweep_L.csv",
                            "sweep_n_estimators.csv", "sweep_criterion.csv", "sweep_max_features.csv"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
      }
      CHECK(lines_of(read_text(out / "sweep_L.csv")).size() == 3);
    }
  }
}
