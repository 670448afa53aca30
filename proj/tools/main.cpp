#include "commands.hpp"

int main(int argc, char** argv) { return zsreg::cli::run(argc, argv); }
