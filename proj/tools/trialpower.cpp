#include "trialpower/cli.hpp"

int main(int argc, char** argv) { return trialpower::run_cli(argc, argv); }
