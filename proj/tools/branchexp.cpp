#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "branchexp/cli.hpp"
#include "branchexp/error.hpp"

namespace {

int fail(branchexp::ExitCode code, const std::string& message) {
  std::cerr << "branchexp: " << message << '\n';
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace branchexp;
  CLI::App app{"Growth exponents of high-value vertex counts on coloured trees"};
  std::string config_path;
  std::string output;
  std::string command;
  int workers = 0;
  bool print_config = false;
  app.add_option("config", config_path, "JSON run configuration")->required();
  app.add_option("-o,--output", output, "Output directory (overrides the config)");
  app.add_option("-c,--command", command,
                 "Command (overrides the config): analyze, simulate, ld-check, brw, fpp, verify");
  app.add_option("-w,--workers", workers, "Worker threads for replica loops")
      ->check(CLI::Range(1, 1024));
  app.add_flag("--print-config", print_config, "Print the normalized configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kParse);
  }

  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + config_path);
    std::ostringstream text;
    text << in.rdbuf();
    std::string doc = text.str();
    cli::RunConfig config = cli::parse_config(doc);
    if (!command.empty()) {
      bool known = false;
      for (auto c : {cli::Command::kAnalyze, cli::Command::kSimulate, cli::Command::kLdCheck,
                     cli::Command::kBrw, cli::Command::kFpp, cli::Command::kVerify}) {
        if (command == cli::command_name(c)) {
          config.command = c;
          known = true;
        }
      }
      if (!known) throw ValidationError("unknown command '" + command + "'");
      // Re-validate so command-specific requirements (seed, grids) apply.
      config = cli::parse_config(cli::emit_config(config));
    }
    if (!output.empty()) config.output_path = output;
    if (workers > 0) config.workers = workers;
    if (print_config) {
      std::cout << cli::emit_config(config);
      return 0;
    }
    const cli::Output result = cli::execute(config);
    cli::write_output(config, result, std::cout);
    return result.status;
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(ExitCode::kValidation, e.what());
  }
}
