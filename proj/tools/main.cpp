#include "cli_app.hpp"

int main(int argc, char** argv) { return rnnlab::run_cli(argc, argv); }
