#include "chainopt/cli.hpp"

int main(int argc, char** argv) { return chainopt::cli::run(argc, argv); }
