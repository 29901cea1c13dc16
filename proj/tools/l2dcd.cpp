#include "l2dcd/cli.hpp"

int main(int argc, char** argv) { return l2dcd::cli::run(argc, argv); }
