#include "fourns/cli.hpp"

int main(int argc, char** argv) { return fourns::cli_main(argc, argv); }
