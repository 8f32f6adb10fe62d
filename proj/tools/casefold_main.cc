#include "casefold/cli.h"

int main(int argc, char** argv) { return casefold::cli::run(argc, argv); }
