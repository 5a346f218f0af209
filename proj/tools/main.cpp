#include "cli.hpp"

int main(int argc, char** argv) {
  return meshmem::run_cli(argc, argv);
}
