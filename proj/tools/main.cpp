#include "dedup/cli.hpp"

int main(int argc, char** argv) { return dedup::run_cli(argc, argv); }
