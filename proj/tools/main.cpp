#include <iostream>

#include "carnot/graded_group.hpp"

int main() {
  std::cout << "carnot cli placeholder\n";
  return 0;
}
