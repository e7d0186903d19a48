#include "cli.hpp"

int main(int argc, char** argv) { return qmlcp::cli_main(argc, argv); }
