#include "slipstokes/cli_runs.hpp"

int main(int argc, char** argv) {
  return slipstokes::cli::cli_main(argc, argv);
}
