#include "seqcls/cli.hpp"

int main(int argc, char** argv) { return seqcls::cli::run(argc, argv); }
