#include "qbl/cli.hpp"

int main(int argc, char** argv) { return qbl::run_cli(argc, argv); }
