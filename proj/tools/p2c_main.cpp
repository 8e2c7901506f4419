#include "p2c/cli.hpp"

int main(int argc, char** argv) { return p2c::run_cli(argc, argv); }
