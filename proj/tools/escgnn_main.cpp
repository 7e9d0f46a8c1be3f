#include "escgnn/cli.hpp"

int main(int argc, char** argv) { return escgnn::cli_dispatch(argc, argv); }
