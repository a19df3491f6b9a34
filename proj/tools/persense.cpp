#include "persense/commands.hpp"

int main(int argc, char** argv) { return persense::commands::cli_main(argc, argv); }
