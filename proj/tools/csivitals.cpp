#include "csivitals/cli.hpp"

int main(int argc, char** argv) { return csivitals::cli::run(argc, argv); }
