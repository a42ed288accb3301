#include <cstdio>

int main() {
  std::puts("delta_lab: pipeline commands not wired up yet");
  return 1;
}
