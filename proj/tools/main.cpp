#include "commands.hpp"

int main(int argc, char** argv) { return mfpca::cli::dispatch(argc, argv); }
