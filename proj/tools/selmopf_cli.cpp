#include "selmopf/cli.hpp"

int main(int argc, char** argv) { return selmopf::run_cli(argc, argv); }
