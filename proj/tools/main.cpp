#include "csi/cli.hpp"

int main(int argc, char** argv) { return csi::cli::main(argc, argv); }
