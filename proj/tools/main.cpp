#include "normsel/cli.hpp"

int main(int argc, char** argv) { return normsel::cli::run(argc, argv); }
