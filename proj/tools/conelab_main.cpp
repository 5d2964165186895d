#include <iostream>

int main() {
  std::cerr << "conelab: no subcommands wired up yet\n";
  return 2;
}
