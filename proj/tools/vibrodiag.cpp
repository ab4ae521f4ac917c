#include "vibrodiag/cli.hpp"

int main(int argc, char** argv) { return vibrodiag::cli::run(argc, argv); }
