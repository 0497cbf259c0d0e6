#include "polyeval/orchestrator.hpp"

int main(int argc, char** argv) { return polyeval::cli::main(argc, argv); }
