#include "streamglm_cli/cli.hpp"

int main(int argc, char** argv) { return streamglm::cli_main(argc, argv); }
