#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "trl/cli.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("trl"));
  std::vector<std::string> args(argv + 1, argv + argc);
  return trl::cli::run_cli(args, std::cout, std::cerr);
}
