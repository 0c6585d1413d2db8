#include "fisherlab/cli.hpp"

int main(int argc, char** argv) { return fisherlab::cli_main(argc, argv); }
