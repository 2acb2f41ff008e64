// Criterion 9: the command-line pipeline run twice from scratch.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "acceptance.hpp"
#include "lmfcn/run_io.hpp"

namespace lmfcn::acceptance {

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, std::string& output) {
  const std::string cmd = std::string(LMFCN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return -1;
  std::array<char, 4096> buf{};
  while (const std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every column except the wall-clock one.
std::string csv_without_ms(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  for (std::string line; std::getline(in, line);) out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

struct Artifacts {
  std::string epochs;
  std::string report;
  std::string metrics;
  std::string checkpoint;
};

Artifacts pipeline(const fs::path& root, std::string& log) {
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string data = (root / "data").string();
  const std::string run = (root / "run").string();
  const std::string report = (root / "eval.json").string();
  for (const std::string& args : {"gen-data --out " + data + " --n-per-class 40 --size 32 --seed 7",
                                  "train --data " + data + " --out " + run + " --seed 7 --epochs 5",
                                  "eval --run " + run + " --out " + report}) {
    if (run_cli(args, log) != 0) throw std::runtime_error("command failed: lmfcn " + args + ": " + log);
  }
  return {csv_without_ms(read_text_file(fs::path(run) / "epochs.csv")), read_text_file(report),
          read_text_file(fs::path(run) / "metrics.json"), read_text_file(fs::path(run) / "model.ckpt")};
}

}  // namespace

Outcome pipeline_determinism() {
  const fs::path base = fs::temp_directory_path() / "lmfcn_acceptance_determinism";
  std::string log;
  const Artifacts a = pipeline(base / "a", log);
  const Artifacts b = pipeline(base / "b", log);
  fs::remove_all(base);
  const bool epochs = a.epochs == b.epochs;
  const bool report = a.report == b.report;
  const bool metrics = a.metrics == b.metrics;
  const bool ckpt = a.checkpoint == b.checkpoint;
  const auto rows = static_cast<std::size_t>(std::count(a.epochs.begin(), a.epochs.end(), '\n')) - 1;
  std::ostringstream d;
  d << "gen-data -> train (" << rows << " epochs) -> eval, twice: epoch CSV " << (epochs ? "identical" : "DIFFERS")
    << ", EvalReport " << (report ? "identical" : "DIFFERS") << ", metrics.json "
    << (metrics ? "identical" : "DIFFERS") << ", checkpoint " << (ckpt ? "identical" : "DIFFERS");
  return {epochs && report && metrics && ckpt && rows == 5, d.str()};
}

}  // namespace lmfcn::acceptance
