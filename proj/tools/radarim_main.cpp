#include "radarim/cli.hpp"

int main(int argc, char** argv) { return radarim::run_cli(argc, argv); }
