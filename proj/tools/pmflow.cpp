#include <iostream>

#include "pmflow/cli.hpp"

int main(int argc, char** argv) {
    return pmflow::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
