#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
#ifdef SIGPIPE
  // A closed downstream pipe surfaces as a failed write instead of a signal.
  std::signal(SIGPIPE, SIG_IGN);
#endif
  std::ios::sync_with_stdio(false);
  std::vector<std::string> args(argv + 1, argv + argc);
  return irds::cli::run(args, std::cout, std::cerr);
}
