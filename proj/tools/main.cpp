#include "rescert/cli.hpp"

int main(int argc, char** argv) { return rescert::cli::run(argc, argv); }
