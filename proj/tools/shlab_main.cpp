#include "shlab/cli.hpp"

int main(int argc, char** argv) { return shlab::run_cli(argc, argv); }
