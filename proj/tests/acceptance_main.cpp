#include <cstdio>
#include "ltsim/suites.hpp"
int main() { return 0; }
