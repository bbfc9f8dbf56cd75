#include <iostream>

#include "phonograde/cli.hpp"

int main(int argc, char** argv)
{
    return phonograde::cli::run_command(argc, argv, std::cout, std::cerr);
}
