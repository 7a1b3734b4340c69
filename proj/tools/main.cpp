#include <iostream>

#include "aeromap/log.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  aeromap::log::init_from_env();
  return aeromap::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
