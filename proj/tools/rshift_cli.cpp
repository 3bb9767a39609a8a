#include "rshift/cli.hpp"

int main(int argc, char** argv) { return rshift::run_cli(argc, argv); }
