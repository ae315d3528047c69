// placeholder while the library comes up; replaced by the real CLI
#include <cstdio>
int main() { std::puts("rrrlab: cli not wired yet"); return 0; }
