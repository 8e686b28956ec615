#include "prymlab/cli.hpp"

int main(int argc, char** argv) { return prymlab::run_cli(argc, argv); }
