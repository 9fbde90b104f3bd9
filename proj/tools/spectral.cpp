#include "spectral/cli.hpp"

int main(int argc, char** argv) { return spectral::dispatch(argc, argv); }
