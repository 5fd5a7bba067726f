#include "kaczmarz/cli.hpp"

int main(int argc, char** argv) { return kaczmarz::cli::main(argc, argv); }
