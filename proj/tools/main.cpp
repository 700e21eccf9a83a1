#include "sonadv/experiment.hpp"

int main(int argc, char** argv) { return sonadv::harness::cli_main(argc, argv); }
