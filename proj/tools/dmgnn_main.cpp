#include "dmgnn/cli.hpp"

int main(int argc, char** argv) { return dmgnn::cli::run(argc, argv); }
