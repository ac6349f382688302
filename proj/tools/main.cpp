#include <cstdio>

int main() {
  std::puts("distset cli placeholder");
  return 0;
}
