#include "svrp/bench.hpp"

int main(int argc, char** argv) { return svrp::cli_main(argc, argv); }
