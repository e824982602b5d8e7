#include "camokit/cli.hpp"

int main(int argc, char** argv) { return camokit::run_cli(argc, argv); }
