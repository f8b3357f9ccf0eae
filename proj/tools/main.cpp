#include "cot/commands.hpp"

int main(int argc, char** argv) { return cot::run_cli(argc, argv); }
