#include "mcs/cli.hpp"

int main(int argc, char** argv) { return mcs::cli::main_entry(argc, argv); }
