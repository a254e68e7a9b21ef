#include "rcsb/cli.hpp"

int main(int argc, char** argv) { return rcsb::cli::dispatch(argc, argv); }
