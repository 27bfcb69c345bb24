#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "poisonlab/json_io.hpp"
#include "poisonlab/synth.hpp"

using namespace poisonlab;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string output;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(POISONLAB_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (const std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("poisonlab-cli-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    csv = dir / "data.csv";
    const CliRun r = run("synth --kind gaussians --count 24 --seed 4 --out " + csv.string());
    ASSERT_EQ(r.status, 0) << r.output;
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path dir, csv;
};

}  // namespace

TEST_F(Cli, HelpListsSubcommands) {
  const CliRun r = run("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"sweep", "attack", "report", "serve", "synth"}) {
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  }
  EXPECT_NE(run("").status, 0);
}

TEST_F(Cli, SynthWritesLoadableCsv) {
  const Dataset d = load_csv(csv.string(), "label", "1", "-1");
  EXPECT_EQ(d.size(), 24u);
  const Dataset expected = synth::two_gaussians(24, 4.0, 1.0, 4);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i], expected[i]);
}

TEST_F(Cli, SweepIsDeterministicAcrossRunsAndThreadCounts) {
  const std::string base = "sweep --dataset " + csv.string() + " --seed 9 --cap 3 --out ";
  ASSERT_EQ(run(base + (dir / "a.csv").string()).status, 0);
  ASSERT_EQ(run(base + (dir / "b.csv").string() + " --parallelism 3").status, 0);
  const CliRun json = run(base + (dir / "c.json").string() + " --algorithm binary-search");
  ASSERT_EQ(json.status, 0) << json.output;
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));

  std::istringstream lines(slurp(dir / "a.csv"));
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header.rfind("id,label,predicted,dbd,mcsa_binary_search,risk_binary_search", 0), 0u) << header;
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) rows += line.empty() ? 0 : 1;
  EXPECT_EQ(rows, 24u);

  const Json run_info = Json::parse(slurp(dir / "a.csv.run.json"));
  EXPECT_EQ(run_info.at("seed"), 9);
  EXPECT_EQ(run_info.at("cap"), 3);
  const Json doc = Json::parse(slurp(dir / "c.json"));
  EXPECT_EQ(doc.at("seed"), 9);
  EXPECT_EQ(doc.at("algorithms"), Json::array({"binary_search"}));
}

TEST_F(Cli, AttackOnMisclassifiedTargetReportsZeroPoisons) {
  // A negative planted deep inside the positive cluster is misclassified by the victim.
  const Dataset base = load_csv(csv.string(), "label", "1", "-1");
  const Instance outlier{base.max_id() + 1, {4.0, 0.0}, Label::Negative, Provenance::Original};
  const fs::path planted = dir / "planted.csv";
  {
    std::ofstream out(planted);
    write_csv(out, base.with_appended(std::span<const Instance>(&outlier, 1)));
  }
  const Dataset data = standardize(load_csv(planted.string(), "label", "1", "-1"));
  const Model victim = train(data, ModelConfig{});
  ASSERT_NE(predict(victim, data.by_id(outlier.id).features), Label::Negative);
  const CliRun wrong = run("attack --dataset " + planted.string() + " --target " + std::to_string(outlier.id) +
                           " --k 3 --out " + (dir / "wrong").string());
  ASSERT_EQ(wrong.status, 0) << wrong.output;
  EXPECT_NE(wrong.output.find("outcome:         success"), std::string::npos) << wrong.output;
  EXPECT_NE(wrong.output.find("0 inserted, poisoning rate 0.00%"), std::string::npos) << wrong.output;

  std::optional<std::size_t> right;
  for (const auto& inst : data) {
    if (predict(victim, inst.features) == inst.label) right = inst.id;
  }
  ASSERT_TRUE(right.has_value());
  const CliRun a = run("attack --dataset " + planted.string() + " --target " + std::to_string(*right) +
                    " --algorithm stingray --budget 4 --k 3 --out " + (dir / "right").string());
  ASSERT_EQ(a.status, 0) << a.output;
  for (const char* file : {"result.json", "overview.json", "projection.json", "instances.json", "features.json",
                           "graph.json", "run.json"}) {
    EXPECT_TRUE(fs::exists(dir / "right" / file)) << file;
  }
  const CliRun rep = run("report --out " + (dir / "right").string());
  EXPECT_EQ(rep.status, 0);
  EXPECT_EQ(rep.output, a.output);
  EXPECT_NE(rep.output.find("accuracy"), std::string::npos);
}

TEST_F(Cli, BadInputsExitNonZero) {
  const CliRun missing = run("sweep --dataset " + (dir / "nope.csv").string() + " --out x.csv");
  EXPECT_NE(missing.status, 0);
  const CliRun label = run("sweep --dataset " + csv.string() + " --label-col cls --out " + (dir / "x.csv").string());
  EXPECT_EQ(label.status, 1);
  EXPECT_NE(label.output.find("error: "), std::string::npos);
  EXPECT_NE(label.output.find("label column 'cls' not found"), std::string::npos);
  const CliRun target = run("attack --dataset " + csv.string() + " --target 500 --out " + (dir / "t").string());
  EXPECT_EQ(target.status, 1);
  EXPECT_NE(run("sweep --dataset " + csv.string() + " --algorithm gradient --out y.csv").status, 0);
  EXPECT_NE(run("report --out " + (dir / "absent").string()).status, 0);
}
