#include <iostream>

#include "kernelprof/cli.hpp"

int main(int argc, char** argv) {
  return kprof::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
