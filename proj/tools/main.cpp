#include <cstdio>

int main() {
  std::puts("minimap_oracle: subcommands not wired up yet");
  return 2;
}
