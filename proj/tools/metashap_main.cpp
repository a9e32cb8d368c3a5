#include "metashap/cli.hpp"

int main(int argc, char** argv) { return metashap::cli::run(argc, argv); }
