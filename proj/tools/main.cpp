#include "dtr/cli.hpp"

int main(int argc, char** argv) { return dtr::cli_main(argc, argv); }
