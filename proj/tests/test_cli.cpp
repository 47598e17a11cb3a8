#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ora/cli.hpp"
#include "ora/feature_store.hpp"
#include "test_support.hpp"

namespace ora::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result ora(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  }
  return files;
}

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = ora::testing::scratch_dir("cli_" + std::string(
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    ASSERT_EQ(ora({"synth", "--out", s("w"), "--dim", "16", "--classes", "4", "--n-train", "300",
                   "--n-test", "200", "--n-ood", "200"})
                  .code,
              kExitOk);
  }
  std::string s(const std::string& rel) const { return (dir / rel).string(); }
  std::vector<std::string> head() const {
    return {"--weights", s("w/weights.oraf"), "--bias", s("w/bias.oraf")};
  }
  std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) const {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  Result calibrate(const std::string& out, std::vector<std::string> extra = {}) {
    return ora(with(with({"calibrate", "--id-train", s("w/id_train.oraf"), "--out", s(out)}, head()),
                    extra));
  }
  Result score(const std::string& features, const std::string& cal, const std::string& out,
               std::vector<std::string> extra = {}) {
    return ora(with(with({"score", "--features", s(features), "--calibration", s(cal), "--out",
                          s(out)},
                         head()),
                    extra));
  }
  fs::path dir;
};

TEST_F(Pipeline, SynthWritesWorld) {
  for (const char* f : {"id_train.oraf", "id_train_labels.oraf", "id_test.oraf",
                        "id_test_labels.oraf", "ood.oraf", "weights.oraf", "bias.oraf",
                        "world.json"}) {
    EXPECT_TRUE(fs::exists(dir / "w" / f)) << f;
  }
  EXPECT_EQ(load_features(dir / "w/id_test.oraf").data.rows(), 200u);
  EXPECT_EQ(json::parse(slurp(dir / "w/world.json"))["dim"], 16);
}

TEST_F(Pipeline, EveryMethodScoresAndEvaluates) {
  ASSERT_EQ(calibrate("cal").code, kExitOk);
  for (const char* m : {"ora", "fdbd", "msp", "maxlogit", "energy", "knn"}) {
    const std::string id = std::string(m) + "/id.oraf", ood = std::string(m) + "/ood.oraf";
    ASSERT_EQ(score("w/id_test.oraf", "cal", id, {"--method", m}).code, kExitOk) << m;
    ASSERT_EQ(score("w/ood.oraf", "cal", ood, {"--method", m}).code, kExitOk) << m;
    const auto r = ora({"evaluate", "--id", s(id), "--ood", s(ood)});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto report = json::parse(r.out);
    EXPECT_EQ(report["method"], m);
    EXPECT_EQ(report["n_id"], 200);
    EXPECT_GE(report["auroc"].get<double>(), 0.0);
    EXPECT_LE(report["fpr95"].get<double>(), 1.0);
  }
  const auto meta = json::parse(slurp(dir / "ora/id.meta.json"));
  EXPECT_EQ(meta["n"], 200);
  EXPECT_EQ(meta["config_hash"].get<std::string>().size(), 40u);
  EXPECT_EQ(meta["inputs"]["features"]["blob"], git_blob_hash(dir / "w/id_test.oraf"));
}

TEST_F(Pipeline, EveryCommandIsBitwiseReproducible) {
  const auto run_all = [&] {
    EXPECT_EQ(calibrate("cal", {"--shape", "react"}).code, kExitOk);
    EXPECT_EQ(score("w/id_test.oraf", "cal", "s/id.oraf").code, kExitOk);
    EXPECT_EQ(score("w/ood.oraf", "cal", "s/ood.oraf").code, kExitOk);
    EXPECT_EQ(ora({"evaluate", "--id", s("s/id.oraf"), "--ood", s("s/ood.oraf"), "--out",
                   s("s/report.json")})
                  .code,
              kExitOk);
    EXPECT_EQ(ora({"ensemble", "--id", s("s/id.oraf"), s("s/id.oraf"), "--ood", s("s/ood.oraf"),
                   s("s/ood.oraf"), "--out", s("s/ens.json")})
                  .code,
              kExitOk);
    EXPECT_EQ(ora(with({"diagnose", "--id-features", s("w/id_test.oraf"), "--ood-features",
                        s("w/ood.oraf"), "--calibration", s("cal"), "--out", s("d")},
                       head()))
                  .code,
              kExitOk);
  };
  run_all();
  const auto first = snapshot(dir);
  run_all();
  EXPECT_EQ(snapshot(dir), first);
}

TEST_F(Pipeline, SelfEnsembleMatchesSingleReport) {
  ASSERT_EQ(calibrate("cal").code, kExitOk);
  ASSERT_EQ(score("w/id_test.oraf", "cal", "s/id.oraf").code, kExitOk);
  ASSERT_EQ(score("w/ood.oraf", "cal", "s/ood.oraf").code, kExitOk);
  const auto single = json::parse(ora({"evaluate", "--id", s("s/id.oraf"), "--ood", s("s/ood.oraf")}).out);
  const auto r = ora({"ensemble", "--id", s("s/id.oraf"), s("s/id.oraf"), "--ood",
                      s("s/ood.oraf"), s("s/ood.oraf")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ens = json::parse(r.out);
  EXPECT_EQ(ens["auroc"], single["auroc"]);
  EXPECT_EQ(ens["fpr95"], single["fpr95"]);
}

TEST_F(Pipeline, EnsembleRejectsMixedHeads) {
  ASSERT_EQ(calibrate("cal").code, kExitOk);
  ASSERT_EQ(score("w/id_test.oraf", "cal", "s/id.oraf").code, kExitOk);
  ASSERT_EQ(ora({"synth", "--out", s("w2"), "--dim", "16", "--classes", "4", "--seed", "99",
                 "--n-train", "300", "--n-test", "200", "--n-ood", "200"})
                .code,
            kExitOk);
  ASSERT_EQ(ora({"score", "--method", "msp", "--features", s("w/ood.oraf"), "--weights",
                 s("w2/weights.oraf"), "--out", s("s/ood.oraf")})
                .code,
            kExitOk);
  const auto r = ora({"ensemble", "--id", s("s/id.oraf"), "--ood", s("s/ood.oraf")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_EQ(json::parse(r.err)["error"], "model-set-mismatch");
  const auto uneven = ora({"ensemble", "--id", s("s/id.oraf"), s("s/id.oraf"), "--ood", s("s/ood.oraf")});
  EXPECT_EQ(uneven.code, kExitData);
}

TEST_F(Pipeline, DiagnoseWritesHistograms) {
  ASSERT_EQ(calibrate("cal").code, kExitOk);
  const auto r = ora(with({"diagnose", "--id-features", s("w/id_test.oraf"), "--ood-features",
                           s("w/ood.oraf"), "--calibration", s("cal"), "--out", s("d")},
                          head()));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"theta_hist.csv", "sin_alpha_hist.csv", "distance_hist.csv"}) {
    std::istringstream csv(slurp(dir / "d" / f));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "bin,lo,hi,id,ood");
    std::size_t rows = 0, id = 0, ood = 0;
    while (std::getline(csv, line)) {
      ++rows;
      std::istringstream fields(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(fields, cell, ',')) cells.push_back(cell);
      ASSERT_EQ(cells.size(), 5u);
      id += std::stoul(cells[3]);
      ood += std::stoul(cells[4]);
    }
    EXPECT_EQ(rows, 64u);
    EXPECT_EQ(id, 200u);
    EXPECT_EQ(ood, 200u);
  }
  EXPECT_TRUE(json::parse(r.out).contains("theta"));
}

TEST_F(Pipeline, ConfigFileWithFlagsWinning) {
  ASSERT_EQ(calibrate("cal").code, kExitOk);
  std::ofstream(dir / "cfg.json") << R"({"method": "energy", "agg": "mean"})";
  auto base = with({"score", "--config", s("cfg.json"), "--features", s("w/id_test.oraf"),
                    "--calibration", s("cal")},
                   head());
  ASSERT_EQ(ora(with(base, {"--out", s("c/a.oraf")})).code, kExitOk);
  EXPECT_EQ(json::parse(slurp(dir / "c/a.meta.json"))["method"], "energy");
  ASSERT_EQ(ora(with(base, {"--method", "msp", "--out", s("c/b.oraf")})).code, kExitOk);
  EXPECT_EQ(json::parse(slurp(dir / "c/b.meta.json"))["method"], "msp");
}

TEST_F(Pipeline, ShapedScoringUsesCalibratedClamp) {
  ASSERT_EQ(calibrate("cal", {"--shape", "react", "--shape-percentile", "90"}).code, kExitOk);
  const auto meta = json::parse(slurp(dir / "cal/calibration.json"));
  EXPECT_EQ(meta["shape"], "react");
  EXPECT_TRUE(fs::exists(dir / "cal/react_clamp.oraf"));
  ASSERT_EQ(score("w/id_test.oraf", "cal", "s/id.oraf").code, kExitOk);
  const auto r = score("w/id_test.oraf", "cal", "s/x.oraf", {"--shape", "scale"});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST_F(Pipeline, ExitCodes) {
  auto r = ora({});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(json::parse(r.err)["error"], "usage");
  EXPECT_EQ(ora({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(ora({"evaluate", "--id", s("w/none.oraf")}).code, kExitUsage);
  EXPECT_EQ(ora({"score", "--method", "odin", "--features", s("w/ood.oraf"), "--out", s("x.oraf")}).code,
            kExitUsage);
  EXPECT_EQ(ora({"score", "--features", s("w/ood.oraf"), "--out", s("x.oraf")}).code, kExitUsage);

  r = ora({"evaluate", "--id", s("w/missing.oraf"), "--ood", s("w/ood.oraf")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_EQ(json::parse(r.err)["error"], "io-failure");
  r = ora({"evaluate", "--id", s("w/id_test.oraf"), "--ood", s("w/ood.oraf")});
  EXPECT_EQ(r.code, kExitData);  // 2-D tensors are not score vectors
  EXPECT_EQ(json::parse(r.err)["error"], "shape-mismatch");

  std::ofstream(dir / "junk.oraf") << "not a tensor";
  r = ora({"evaluate", "--id", s("junk.oraf"), "--ood", s("junk.oraf")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_EQ(json::parse(r.err)["error"], "bad-magic");

  EXPECT_EQ(ora({"--help"}).code, kExitOk);
}

TEST_F(Pipeline, ScoreFailsWhenRowsCannotBeScored) {
  write_tensor(make_tensor(Matrix(2, 16, 0.0)), dir / "zeros.oraf");
  ASSERT_EQ(calibrate("cal", {"--centering", "origin"}).code, kExitOk);
  const auto r = score("zeros.oraf", "cal", "s/z.oraf");
  EXPECT_EQ(r.code, kExitData);
  EXPECT_EQ(json::parse(r.err)["error"], "degenerate-centering");
}

TEST(Support, GitBlobHash) {
  const auto dir = ora::testing::scratch_dir("blob");
  std::ofstream(dir / "empty").close();
  std::ofstream(dir / "hello") << "hello\n";
  EXPECT_EQ(git_blob_hash(dir / "empty"), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash(dir / "hello"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
}

TEST(Support, SharedHistogram) {
  const auto h = shared_histogram(std::vector<double>{0, 1, 2, 3}, std::vector<double>{4, NAN}, 4);
  EXPECT_EQ(h.lo, 0.0);
  EXPECT_EQ(h.hi, 4.0);
  EXPECT_EQ(h.id_counts, (std::vector<std::size_t>{1, 1, 1, 1}));
  EXPECT_EQ(h.ood_counts, (std::vector<std::size_t>{0, 0, 0, 1}));
  const auto flat = shared_histogram(std::vector<double>{2, 2}, std::vector<double>{2}, 3);
  EXPECT_EQ(flat.id_counts, (std::vector<std::size_t>{2, 0, 0}));
  EXPECT_EQ(flat.ood_counts, (std::vector<std::size_t>{1, 0, 0}));
  EXPECT_EQ(ora::testing::error_code_of([] {
              shared_histogram(std::vector<double>{}, std::vector<double>{}, 3);
            }),
            Errc::empty_input);
}

}  // namespace
}  // namespace ora::cli
