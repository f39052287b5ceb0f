#include "posef/cli/app.hpp"

int main(int argc, char** argv) { return posef::cli::run(argc, argv); }
