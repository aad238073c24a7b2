#include "awe/cli.hpp"

int main(int argc, char** argv) { return awe::cli_main(argc, argv); }
