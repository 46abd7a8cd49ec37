#include <iostream>

#include "cartoforge/service/cli.hpp"

int main(int argc, char** argv) {
    return cartoforge::service::cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
