#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') {
      q += "'\\''";
    } else {
      q += c;
    }
  }
  return q + "'";
}

Outcome run(const std::vector<std::string>& args) {
  static int counter = 0;
  const fs::path tmp = fs::temp_directory_path();
  const std::string tag = std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const std::string out_path = (tmp / ("gw_out_" + tag)).string();
  const std::string err_path = (tmp / ("gw_err_" + tag)).string();
  std::string cmd = quote(GEOWEALTH_CLI);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote(out_path) + " 2>" + quote(err_path);
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = fixture::read_file(out_path);
  o.err = fixture::read_file(err_path);
  fs::remove(out_path);
  fs::remove(err_path);
  return o;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Small world and a matching training config, shared by the tests below.
struct World {
  fixture::TempDir dir{"cli"};
  std::string train_conf;

  World() {
    fixture::write_file(dir.file("synth.conf"),
                        "n_settlements = 600\nn_clusters = 200\nn_surveys = 10\nembedding_dim = 8\nseed = 3\n");
    train_conf = dir.file("train.conf");
    fixture::write_file(train_conf, "input_dim = 8\nhidden_dim = 16\nbatch_points = 64\nbatch_roots = 64\n");
    const auto o = run({"synth", "--config", dir.file("synth.conf"), "--out", dir.file("w")});
    REQUIRE_MESSAGE(o.code == 0, o.err);
  }

  std::vector<std::string> data() const {
    return {"--clusters", dir.file("w/clusters.csv"), "--settlements", dir.file("w/settlements.csv"),
            "--embeddings", dir.file("w/embeddings.bin")};
  }

  std::vector<std::string> with_data(std::vector<std::string> head, const std::vector<std::string>& tail = {}) const {
    for (const auto& a : data()) head.push_back(a);
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  }
};

World& world() {
  static World w;
  return w;
}

}  // namespace

TEST_CASE("synth writes the files with the configured counts") {
  fixture::TempDir dir("synth");
  const auto o = run({"synth", "--config", GEOWEALTH_CONFIG_DIR "/synthetic_default.conf", "--out", dir.file("a")});
  REQUIRE_MESSAGE(o.code == 0, o.err);
  CHECK(o.out.find("# resolved config") != std::string::npos);
  CHECK(count_lines(fixture::read_file(dir.file("a/settlements.csv"))) == 5001);
  CHECK(count_lines(fixture::read_file(dir.file("a/clusters.csv"))) == 1501);
  CHECK(count_lines(fixture::read_file(dir.file("a/truth.csv"))) == 6501);
  CHECK(fs::exists(dir.file("a/embeddings.bin")));
}

TEST_CASE("synth is byte-identical for a seed") {
  auto& w = world();
  const auto o = run({"synth", "--config", w.dir.file("synth.conf"), "--out", w.dir.file("again")});
  REQUIRE(o.code == 0);
  for (const char* name : {"settlements.csv", "clusters.csv", "embeddings.bin", "truth.csv"}) {
    CAPTURE(name);
    CHECK(fixture::read_file(w.dir.file(std::string("w/") + name)) ==
          fixture::read_file(w.dir.file(std::string("again/") + name)));
  }
  const auto other = run({"synth", "--config", w.dir.file("synth.conf"), "--seed", "4", "--out", w.dir.file("s4")});
  REQUIRE(other.code == 0);
  CHECK(fixture::read_file(w.dir.file("w/clusters.csv")) != fixture::read_file(w.dir.file("s4/clusters.csv")));
}

TEST_CASE("config errors exit 2 with an error line") {
  fixture::TempDir dir("bad");
  fixture::write_file(dir.file("c.conf"), "n_settlements = 10\nn_clusters = 11\n");
  auto o = run({"synth", "--config", dir.file("c.conf"), "--out", dir.file("x")});
  CHECK(o.code == 2);
  CHECK(o.err.starts_with("error: "));

  fixture::write_file(dir.file("typo.conf"), "n_setlements = 10\n");
  o = run({"synth", "--config", dir.file("typo.conf"), "--out", dir.file("x")});
  CHECK(o.code == 2);
  CHECK(o.err.find("n_setlements") != std::string::npos);

  o = run({"synth", "--out", dir.file("x"), "--bogus"});
  CHECK(o.code == 2);
  CHECK(o.err.starts_with("error: "));

  o = run({});
  CHECK(o.code == 2);

  auto& w = world();
  o = run(w.with_data({"train", "--method", "G", "--out", dir.file("t")}));
  CHECK(o.code == 2);
  o = run(w.with_data({"train", "--method", "A", "--out", dir.file("t"), "--lr-grid", "abc"}));
  CHECK(o.code == 2);
  // 64-d default model against 8-d embeddings.
  o = run(w.with_data({"train", "--method", "A", "--out", dir.file("t"), "--epochs", "1"}));
  CHECK(o.code == 2);
  CHECK(o.err.starts_with("error: "));
  // Real survey groups do not cover the synthetic surveys.
  o = run(w.with_data({"train", "--method", "A", "--out", dir.file("t"), "--config", w.train_conf, "--folds",
                       GEOWEALTH_DATA_DIR "/dhs_fold_groups.csv"}));
  CHECK(o.code == 2);
}

TEST_CASE("runtime failures exit 1") {
  auto& w = world();
  fixture::TempDir dir("rt");
  const auto o = run(w.with_data({"predict", "--method", "A", "--checkpoint", dir.file("nope.bin"), "--out",
                                  dir.file("p.csv"), "--config", w.train_conf}));
  CHECK(o.code == 1);
  CHECK(o.err.starts_with("error: "));
}

TEST_CASE("cross-validate report and determinism") {
  auto& w = world();
  const std::vector<std::string> tail{"--config", w.train_conf, "--epochs", "3", "--lr-grid", "1e-2,1e-3", "--seed", "9"};
  auto a = run(w.with_data({"cross-validate", "--method", "A", "--out", w.dir.file("cv1")}, tail));
  REQUIRE_MESSAGE(a.code == 0, a.err);
  auto b = run(w.with_data({"cross-validate", "--method", "A", "--jobs", "2", "--out", w.dir.file("cv2")}, tail));
  REQUIRE_MESSAGE(b.code == 0, b.err);
  const auto report = fixture::read_file(w.dir.file("cv1/report.csv"));
  CHECK(report == fixture::read_file(w.dir.file("cv2/report.csv")));
  std::istringstream in(report);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 8);
  CHECK(lines[0] == "fold,method,lr,mae,r2");
  for (int k = 1; k <= 5; ++k) CHECK(lines[static_cast<std::size_t>(k)].starts_with(std::to_string(k) + ",A,"));
  CHECK(lines[6].starts_with("mean,A,,"));
  CHECK(lines[7].starts_with("sd,A,,"));
  for (int k = 1; k <= 5; ++k) CHECK(fs::exists(w.dir.file("cv1/checkpoints/fold" + std::to_string(k) + "_A.bin")));
  CHECK(fs::exists(w.dir.file("cv1/manifest.txt")));
  CHECK(a.out.find("# resolved config") != std::string::npos);
}

TEST_CASE("train, build-graph and predict") {
  auto& w = world();
  const auto t = run(w.with_data({"train", "--method", "D", "--out", w.dir.file("tD"), "--config", w.train_conf,
                                  "--epochs", "2", "--lr-grid", "1e-2", "--fold", "2"}));
  REQUIRE_MESSAGE(t.code == 0, t.err);
  CHECK(fs::exists(w.dir.file("tD/model.bin")));
  CHECK(count_lines(fixture::read_file(w.dir.file("tD/curves.csv"))) == 3);

  const auto g = run(w.with_data({"build-graph", "--method", "F", "--config", w.train_conf, "--out", w.dir.file("gF")}));
  REQUIRE_MESSAGE(g.code == 0, g.err);
  CHECK(fixture::read_file(w.dir.file("gF/nodes.csv")).starts_with("index,key,class,lat,lon,survey_id,label\n"));
  CHECK(fixture::read_file(w.dir.file("gF/assignments.csv")).starts_with("cluster,node,key,probability\n"));
  CHECK(run(w.with_data({"build-graph", "--method", "A", "--out", w.dir.file("gA")})).code == 2);

  const auto csv = run(w.with_data({"predict", "--method", "D", "--checkpoint", w.dir.file("tD/model.bin"),
                                    "--config", w.train_conf, "--out", w.dir.file("p.csv")}));
  REQUIRE_MESSAGE(csv.code == 0, csv.err);
  const auto rows = fixture::read_file(w.dir.file("p.csv"));
  CHECK(rows.starts_with("settlement_id,lat,lon,iwi_pred\n"));
  CHECK(count_lines(rows) == 601);

  // Wrong architecture for the method.
  CHECK(run(w.with_data({"predict", "--method", "A", "--checkpoint", w.dir.file("tD/model.bin"), "--config",
                         w.train_conf, "--out", w.dir.file("x.csv")}))
            .code == 2);

  const auto gj = run(w.with_data({"predict", "--method", "D", "--checkpoint", w.dir.file("tD/model.bin"),
                                   "--config", w.train_conf, "--format", "geojson", "--clip", "--out",
                                   w.dir.file("p.geojson")}));
  REQUIRE_MESSAGE(gj.code == 0, gj.err);
  const auto doc = nlohmann::json::parse(fixture::read_file(w.dir.file("p.geojson")));
  CHECK(doc.at("type") == "FeatureCollection");
  const auto& features = doc.at("features");
  REQUIRE(features.size() == 600);
  const auto settlements = fixture::read_file(w.dir.file("w/settlements.csv"));
  for (const auto& f : features) {
    CHECK(f.at("type") == "Feature");
    CHECK(f.at("geometry").at("type") == "Point");
    const auto& xy = f.at("geometry").at("coordinates");
    REQUIRE(xy.size() == 2);
    // lon first; the synthetic box spans lon 30..40, lat -5..5.
    CHECK(xy[0].get<double>() >= 29.0);
    CHECK(xy[1].get<double>() <= 6.0);
    const double v = f.at("properties").at("iwi_pred").get<double>();
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
    CHECK(f.at("properties").contains("settlement_id"));
  }
}

TEST_CASE("gradcheck passes") {
  const auto o = run({"gradcheck", "--seed", "5", "--samples", "50", "--max-nodes", "12"});
  const std::string both = o.out + o.err;
  CHECK_MESSAGE(o.code == 0, both);
  CHECK(count_lines(o.out) >= 4);
  for (const char* pair : {"mlp mse", "mlp fuzzy", "gcn mse", "gcn fuzzy"}) CHECK(o.out.find(pair) != std::string::npos);
}

TEST_CASE("help output matches golden files") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"help.txt", {"--help"}},
      {"help_synth.txt", {"synth", "--help"}},
      {"help_build-graph.txt", {"build-graph", "--help"}},
      {"help_train.txt", {"train", "--help"}},
      {"help_cross-validate.txt", {"cross-validate", "--help"}},
      {"help_predict.txt", {"predict", "--help"}},
      {"help_gradcheck.txt", {"gradcheck", "--help"}},
  };
  for (const auto& [file, args] : cases) {
    CAPTURE(file);
    const auto o = run(args);
    CHECK(o.code == 0);
    CHECK(o.out == fixture::read_file(GEOWEALTH_GOLDEN_DIR "/" + file));
  }
}
