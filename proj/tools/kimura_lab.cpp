#include "kimura/cli.hpp"

int main(int argc, char** argv) { return kimura::cli_main(argc, argv); }
