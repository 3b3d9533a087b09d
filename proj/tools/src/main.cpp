#include "fingersim_cli/cli.hpp"

int main(int argc, char** argv) { return fingersim::cli::main(argc, argv); }
