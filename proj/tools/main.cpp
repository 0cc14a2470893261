#include "asdflow/cli.hpp"

int main(int argc, char** argv) { return asdflow::run_cli(argc, argv); }
