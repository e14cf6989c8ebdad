#include "pca/cli.hpp"

int main(int argc, char** argv) { return pca::cli::dispatch(argc, argv); }
