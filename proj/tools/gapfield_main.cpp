#include "gapfield/cli_io.hpp"

int main(int argc, char** argv) { return gapfield::run(argc, argv); }
