#include <bham/cli.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    return bham::cli::run(argc, argv, std::cout, std::cerr);
}
