#include "neutral/cli.hpp"

int main(int argc, char** argv) { return neutral::cli::run(argc, argv); }
