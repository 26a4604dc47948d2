#include "collatz_lab/cli.hpp"

int main(int argc, char** argv) { return collatz_lab::cli::run(argc, argv); }
