#include "qnvb/io/cli.hpp"

int main(int argc, char** argv) { return qnvb::io::run_cli(argc, argv); }
