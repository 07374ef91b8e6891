#include "warped/cli.hpp"

int main(int argc, char** argv) { return warped::cli::run(argc, argv); }
