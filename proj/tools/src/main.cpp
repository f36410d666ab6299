#include "cli.hpp"

int main(int argc, char** argv) { return mvpt::cli::run(argc, argv); }
