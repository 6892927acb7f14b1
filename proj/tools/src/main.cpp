#include "cli.hpp"

int main(int argc, char** argv) { return nnseg::cli::run(argc, argv); }
