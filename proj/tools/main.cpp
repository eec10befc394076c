#include <cstdio>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "common.hpp"
#include "msurr/error.hpp"

// Exit codes: 0 success, 1 the model could not satisfy the request (or a
// file was malformed), 2 usage or configuration errors.
int main(int argc, char** argv) {
  CLI::App app{"msurr: malaria transmission simulator, recurrent surrogate and Bayesian inference"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file (e.g. a recorded run.ini)");
  std::string level = "info";
  app.add_option("--log-level", level, "trace, debug, info, warn, error or off")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  // Logs go to stderr so that stdout stays machine-readable (predict, evaluate).
  spdlog::set_default_logger(spdlog::stderr_color_mt("msurr"));
  app.parse_complete_callback([&] {
    spdlog::set_level(spdlog::level::from_str(level));
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  });

  msurr::cli::register_data_commands(app);
  msurr::cli::register_model_commands(app);
  msurr::cli::register_infer_commands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const msurr::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const msurr::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
