#include "kinlv/cli.hpp"

int main(int argc, char** argv) { return kinlv::run_cli(argc, argv); }
