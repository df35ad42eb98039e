#include <cstdio>

int main() {
  std::puts("loglin: placeholder");
  return 0;
}
