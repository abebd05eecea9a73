#include "attnspec/cli.hpp"

int main(int argc, char** argv) { return attnspec::cli::run(argc, argv); }
