#include "mfcg/cli.hpp"

int main(int argc, char** argv) { return mfcg::cli_main(argc, argv); }
