#include "thc/cli.hpp"

int main(int argc, char** argv) { return thc::cli_main(argc, argv); }
