#include <gtest/gtest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rfa/config.hpp"
#include "rfa/volume_io.hpp"
#include "support.hpp"

namespace rfa {
namespace {

using nlohmann::json;

struct Outcome {
  int code = -1;
  std::vector<std::string> lines;
  json last() const { return json::parse(lines.back()); }
};

Outcome rfa(const std::string& args) {
  const std::string cmd = std::string(RFA_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  Outcome o;
  if (!pipe) return o;
  std::string text;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) text.append(buf, n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) o.lines.push_back(line);
  return o;
}

std::string short_config(const testing::TempDir& dir, double duration) {
  const auto path = (dir / "engine.json").string();
  std::ofstream(path) << json{{"preset", "breast"}, {"v_applied", 60.0}, {"bioheat", {{"duration", duration}}}}.dump();
  return path;
}

TEST(Cli, UsageErrorsExitWithValidationCode) {
  EXPECT_EQ(rfa("--help").code, 0);
  EXPECT_EQ(rfa("simulate").code, 2);
  EXPECT_EQ(rfa("evaluate --pred-dir a --truth-dir b --kind volume").code, 2);
  EXPECT_EQ(rfa("simulate --out /tmp --volume /nonexistent.rfav").code, 2);
}

TEST(Cli, SimulateWritesVolumesAndRunManifest) {
  testing::TempDir dir("cli-sim");
  const auto out = dir / "run";
  const auto r = rfa("simulate --config " + short_config(dir, 10.0) + " --out " + out.string());
  ASSERT_EQ(r.code, 0);
  const auto record = r.last();
  EXPECT_GT(record.at("summary").at("peak_temp_C").get<double>(), 37.0);
  for (const char* f : {"lesion.rfav", "temp.rfav", "damage.rfav", "elec.rfav", "summary.json", "rfa_run.json"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  const auto manifest = read_json_file(out / "rfa_run.json");
  EXPECT_EQ(manifest.at("command"), "simulate");
  EXPECT_EQ(manifest.at("config").at("bioheat").at("duration"), 10.0);
  EXPECT_EQ(manifest.at("config").at("v_applied"), 60.0);
  EXPECT_EQ(read_u8_volume(out / "elec.rfav").spec().dims, (Index3{41, 41, 41}));
}

TEST(Cli, PoseOutsideTheGridIsAValidationError) {
  testing::TempDir dir("cli-pose");
  std::ofstream(dir / "pose.json") << R"({"center": [20, 20, 1], "direction": [0, 0, 1]})";
  const auto r = rfa("simulate --config " + short_config(dir, 2.0) + " --pose " + (dir / "pose.json").string() +
                     " --out " + (dir / "run").string());
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, GenerateSplitAndEvaluate) {
  testing::TempDir dir("cli-data");
  const auto data = dir / "data";
  const auto gen = rfa("gen-data --config " + short_config(dir, 4.0) + " --tumors 3 --per-tumor 2 --seed 5 --workers 2 --out " +
                       data.string());
  ASSERT_EQ(gen.code, 0);
  EXPECT_EQ(gen.lines.size(), 6u);
  EXPECT_TRUE(std::filesystem::exists(data / "rfa_run.json"));
  const auto manifest = read_json_file(data / "manifest.json");
  EXPECT_EQ(manifest.at("samples").size(), 6u);

  const auto replay = dir / "replay";
  ASSERT_EQ(rfa("gen-data --replay " + (data / "manifest.json").string() + " --out " + replay.string()).code, 0);
  EXPECT_EQ(read_file(replay / "manifest.json"), read_file(data / "manifest.json"));

  ASSERT_EQ(rfa("split --manifest " + (data / "manifest.json").string() + " --unforeseen-tumors 1 --seed 3").code, 0);
  const auto splits = read_json_file(data / "splits.json");
  EXPECT_EQ(splits.at("unforeseen_tumors").size(), 1u);
  EXPECT_EQ(splits.at("test_unforeseen").size(), 1u);

  const auto eval_out = dir / "eval";
  const auto lesion = rfa("evaluate --pred-dir " + data.string() + " --truth-dir " + replay.string() +
                          " --kind lesion --out " + eval_out.string());
  ASSERT_EQ(lesion.code, 0);
  EXPECT_EQ(lesion.last().at("n"), 6);
  EXPECT_EQ(lesion.last().at("Dice"), 1.0);
  const auto temp = rfa("evaluate --pred-dir " + data.string() + " --truth-dir " + replay.string() +
                        " --kind temp --out " + eval_out.string());
  ASSERT_EQ(temp.code, 0);
  EXPECT_EQ(temp.last().at("RMSE"), 0.0);
  EXPECT_EQ(temp.last().at("MAE"), 0.0);
  EXPECT_TRUE(std::filesystem::exists(eval_out / "evaluate_temp.jsonl"));
  EXPECT_EQ(rfa("evaluate --pred-dir " + dir.path().string() + " --truth-dir " + replay.string()).code, 2);
}

TEST(Cli, ServeReportsAnOccupiedPort) {
  const int sock = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(sock, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(sock, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::listen(sock, 1), 0);
  socklen_t len = sizeof addr;
  ::getsockname(sock, reinterpret_cast<sockaddr*>(&addr), &len);
  testing::TempDir dir("cli-serve");
  const auto r = rfa("serve --listen 127.0.0.1 --port " + std::to_string(ntohs(addr.sin_port)) + " --out " +
                     dir.path().string());
  ::close(sock);
  EXPECT_EQ(r.code, 4);
}

}  // namespace
}  // namespace rfa
