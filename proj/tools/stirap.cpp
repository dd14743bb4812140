#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "commands.hpp"

namespace cli = stirap::cli;

namespace {

void write_log(const cli::RunLog& log, const std::string& output) {
  try {
    cli::write_atomic(output + ".log", log.text());
  } catch (const stirap::Error& e) {
    std::cerr << "warning: " << e.what() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimized STIRAP pulse simulator"};
  std::vector<std::string> positional;
  std::string output;
  unsigned workers = 0;
  bool verbose = false;
  app.add_option("args", positional, "[verb] config.yaml  (validate needs no config)");
  app.add_option("-o,--output", output, "output path (overrides the config)");
  app.add_option("-j,--workers", workers, "sweep worker threads (overrides the config)");
  app.add_flag("-v,--verbose", verbose, "echo the run log to stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::exit_usage;
  }

  std::optional<cli::Verb> verb;
  std::string config_path;
  for (const auto& a : positional) {
    if (!verb && config_path.empty())
      if (auto v = cli::parse_verb(a)) {
        verb = v;
        continue;
      }
    if (!config_path.empty()) {
      std::cerr << "usage: stirap [verb] config.yaml\n";
      return cli::exit_usage;
    }
    config_path = a;
  }
  if (config_path.empty() && verb != cli::Verb::Validate) {
    std::cerr << "usage: stirap [verb] config.yaml [-o output] [-j workers] [-v]\n";
    return cli::exit_usage;
  }

  cli::RunLog log(verbose);
  cli::RunConfig cfg;
  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw stirap::Error(stirap::ErrorKind::IoError, "cannot read " + config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      text = buf.str();
    }
    cfg = log.phase("parse", [&] { return cli::parse_config(text, verb); });
    if (!output.empty()) {
      cfg.output = output;
      log.line("override: output = " + output);
    }
    if (workers > 0) {
      cfg.workers = workers;
      log.line("override: workers = " + std::to_string(workers));
    }
  } catch (const stirap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_status(e.kind());
  }

  try {
    const int status = cli::dispatch(cfg, log, std::cout);
    write_log(log, cfg.output);
    return status;
  } catch (const stirap::Error& e) {
    std::cerr << "error [" << cli::verb_name(cfg.verb) << "]: " << e.what() << '\n';
    log.line(std::string("error: ") + e.what());
    write_log(log, cfg.output);
    return cli::exit_status(e.kind());
  }
}
