#include "teayield/cli.hpp"

int main(int argc, char** argv) { return teayield::cli::run(argc, argv); }
