#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "augur/cli.hpp"
#include "support.hpp"

using namespace augur;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(std::move(args), out, err);
  return {status, out.str(), err.str()};
}

std::string golden(const std::string& name) { return std::string(AUGUR_GOLDEN_DIR) + "/" + name; }

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("augur_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

}  // namespace

TEST(Cli, InspectJsonMatchesGolden) {
  const auto r = run({"inspect", golden("tiny.prototxt"), "--format", "json"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, read_text_file(golden("tiny_inspect.json")));
  EXPECT_EQ(run({"inspect", golden("tiny.prototxt"), "--format", "json"}).out, r.out);
}

TEST(Cli, InspectAlexNetJson) {
  const auto r = run({"inspect", augur_test::data_path("networks/alexnet.prototxt"), "--format", "json"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("flops_total").get<double>(), 729e6, 0.02 * 729e6);
  const auto& conv1 = j.at("layers").at(0);
  EXPECT_EQ(conv1.at("name"), "conv1");
  EXPECT_EQ(conv1.at("matmul").at("n"), 96);
  EXPECT_EQ(conv1.at("matmul").at("m"), 3025);
  EXPECT_EQ(conv1.at("matmul").at("k"), 363);
  EXPECT_EQ(conv1.at("output_shape"), nlohmann::json::array({96, 55, 55}));
}

TEST(Cli, TableAndJsonAgree) {
  const std::string path = augur_test::data_path("networks/vgg16.prototxt");
  const auto table = run({"inspect", path});
  const auto json = run({"inspect", path, "--format", "json"});
  ASSERT_EQ(table.status, 0);
  const auto j = nlohmann::json::parse(json.out);
  char line[128];
  std::snprintf(line, sizeof line, "total MFLOPs: %.1f\n", j.at("flops_total").get<double>() / 1e6);
  EXPECT_NE(table.out.find(line), std::string::npos);
  std::snprintf(line, sizeof line, "parameters %.1f MiB",
                j.at("memory").at("parameter_bytes").get<double>() / (1024.0 * 1024.0));
  EXPECT_NE(table.out.find(line), std::string::npos);
}

TEST(Cli, InspectOptions) {
  const std::string path = augur_test::data_path("networks/alexnet.prototxt");
  const auto j2 = nlohmann::json::parse(
      run({"inspect", path, "--format", "json", "--bytes-per-element", "2", "--workspace", "max"}).out);
  EXPECT_EQ(j2.at("element_size"), 2);
  EXPECT_EQ(j2.at("workspace_convention"), "max");
  EXPECT_EQ(j2.at("memory").at("workspace_bytes"), 2 * 363 * 3025);
  EXPECT_EQ(run({"inspect", path, "--workspace", "median"}).status, 1);
  EXPECT_EQ(run({"inspect", path, "--format", "xml"}).status, 1);
}

TEST(Cli, EmptyNetworkTable) {
  TempDir dir;
  write_text_file(dir.file("empty.prototxt"), "input: \"data\"\ninput_dim: 3\ninput_dim: 4\ninput_dim: 4\n");
  const auto r = run({"inspect", dir.file("empty.prototxt")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
  EXPECT_EQ(r.out.rfind("layer", 0), 0u);
  EXPECT_NE(r.out.find("(3, 4, 4)"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const auto missing = run({"inspect", "missing.prototxt"});
  EXPECT_EQ(missing.status, 1);
  EXPECT_NE(missing.err.find("missing.prototxt"), std::string::npos);
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);
  EXPECT_EQ(run({}).status, 1);
  EXPECT_EQ(run({"frobnicate"}).status, 1);
  EXPECT_EQ(run({"fit", "x.csv", "-o", "y.json"}).status, 1);  // --processor required
  EXPECT_EQ(run({"--help"}).status, 0);

  TempDir dir;
  write_text_file(dir.file("bad.prototxt"), "input: \"data\"\ninput_dim: 3\n");
  const auto bad = run({"inspect", dir.file("bad.prototxt")});
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.err.find(dir.file("bad.prototxt") + ":3:1"), std::string::npos) << bad.err;
}

TEST(Cli, FitPredictPipeline) {
  TempDir dir;
  const std::string model = dir.file("model.json");
  const auto fit = run({"fit", augur_test::data_path("profiles/tk1_cpu.csv"), "-o", model, "--processor", "cpu"});
  ASSERT_EQ(fit.status, 0) << fit.err;
  EXPECT_EQ(read_text_file(model), dump_model(fit_cpu_model(load_profile(
                                       augur_test::data_path("profiles/tk1_cpu.csv"), ProcessorKind::CpuLike))));

  const std::string alexnet = augur_test::data_path("networks/alexnet.prototxt");
  const auto pred = run({"predict", alexnet, "--model", model, "--format", "json"});
  ASSERT_EQ(pred.status, 0) << pred.err;
  const auto j = nlohmann::json::parse(pred.out);
  EXPECT_GT(j.at("total_ms").get<double>(), 0.0);
  EXPECT_EQ(j.at("matmuls").size(), 8u);

  const auto no_fc = nlohmann::json::parse(run({"predict", alexnet, "--model", model, "--no-fc", "--format", "json"}).out);
  EXPECT_EQ(no_fc.at("matmuls").size(), 5u);
  EXPECT_EQ(no_fc.at("excluded").size(), 3u);
  EXPECT_LT(no_fc.at("total_ms").get<double>(), j.at("total_ms").get<double>());

  const auto table = run({"predict", alexnet, "--model", model});
  EXPECT_NE(table.out.find("predicted total"), std::string::npos);

  EXPECT_EQ(run({"fit", augur_test::data_path("profiles/tk1_cpu.csv"), "-o", model, "--processor", "gpu"}).status, 1);
  EXPECT_EQ(run({"predict", alexnet, "--model", alexnet}).status, 1);
}

TEST(Cli, ProfileMeasureCompare) {
  TempDir dir;
  write_text_file(dir.file("grid.toml"),
                  "n_values = [16, 32]\nm_values = [16, 49]\nk_values = [8, 27, 64]\n"
                  "iterations = 2\nwarmup_iterations = 1\nprocessor_label = \"test\"\n");
  const auto prof = run({"profile", "--grid", dir.file("grid.toml"), "-o", dir.file("p.csv")});
  ASSERT_EQ(prof.status, 0) << prof.err;
  const auto samples = read_profile_csv(read_text_file(dir.file("p.csv")));
  EXPECT_EQ(samples.size(), 12u);
  ASSERT_EQ(run({"fit", dir.file("p.csv"), "-o", dir.file("m.json"), "--processor", "cpu"}).status, 0);

  const auto measure = run({"measure", golden("tiny.prototxt"), "--iterations", "2"});
  ASSERT_EQ(measure.status, 0) << measure.err;
  EXPECT_NE(measure.out.find("measured total"), std::string::npos);
  const auto cmp = run({"compare", golden("tiny.prototxt"), "--model", dir.file("m.json"), "--iterations", "2"});
  ASSERT_EQ(cmp.status, 0) << cmp.err;
  EXPECT_NE(cmp.out.find("median per-layer relative error"), std::string::npos);
  EXPECT_EQ(run({"profile", "--grid", dir.file("nope.toml"), "-o", dir.file("p.csv")}).status, 1);
}
