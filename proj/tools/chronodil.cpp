// chronodil <command> --config <path> [--out <path>] [--jobs N] [--no-timestamp] [--plot <path>]
//
// Exit codes: 0 success, 1 usage or config error, 2 physics-domain or
// numerical error, 3 verification failed (the table is still written).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "chronodil/chronodil.hpp"

namespace fs = std::filesystem;
using namespace chronodil;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw ConfigError(0, "cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relativistic time dilation of quantum clocks"};
  std::string command, config_path, out_path, plot_path;
  std::size_t jobs = 1;
  bool no_timestamp = false;
  app.add_option("command", command, "dilation | coherence | precision | measurement | verify | sweep")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "CSV output (default: stdout)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 256));
  app.add_flag("--no-timestamp", no_timestamp, "omit the generation time from the metadata");
  app.add_option("--plot", plot_path, "write a gnuplot script for measurement or sweep tables (needs --out)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = config::parse(read_file(config_path), command);
    const auto outcome = run::execute(cfg, jobs);
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
    const std::string text = csv::format(outcome.table, config::to_text(cfg), !no_timestamp);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      write_file(out_path, text);
    }
    if (!plot_path.empty()) {
      if (out_path.empty()) throw ConfigError(0, "--plot needs --out");
      const fs::path base = fs::absolute(plot_path).parent_path();
      const std::string rel = fs::relative(fs::absolute(out_path), base).generic_string();
      write_file(plot_path, run::plot_script(outcome.table, rel));
    }
    if (outcome.verification_failed) {
      std::cerr << "verification failed: residual exponent above threshold\n";
      return 3;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
