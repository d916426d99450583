#include "momsens/cli.hpp"

int main(int argc, char** argv) { return momsens::cli::main(argc, argv); }
