#include <iostream>

#include <habit_hjb/cli.hpp>

int main(int argc, char** argv)
{
    return habit_hjb::run_cli(argc, argv, std::cout, std::cerr);
}
