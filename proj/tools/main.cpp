#include "adashift/cli.hpp"

int main(int argc, char** argv) { return adashift::cli_main(argc, argv); }
