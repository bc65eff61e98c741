#include "ibg/cli.hpp"

int main(int argc, char** argv) { return ibg::run_cli(argc, argv); }
