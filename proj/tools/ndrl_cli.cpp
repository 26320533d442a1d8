#include "cli_app.hpp"

int main(int argc, char** argv) { return ndrl::cli::run(argc, argv); }
