#include "pcqkit/cli.hpp"

int main(int argc, char** argv) { return pcqkit::run(argc, argv); }
