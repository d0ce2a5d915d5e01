#include "orthokalman/cli.hpp"

int main(int argc, char** argv) { return orthokalman::cli::run_cli(argc, argv); }
