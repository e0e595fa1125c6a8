#include "cli.hpp"

int main(int argc, char** argv) { return mcomplete::cli::cli_main(argc, argv); }
