// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier reconstructions are shared across criteria through an
// in-memory cache.

#include <iostream>

int main() {
    std::cout << "acceptance suite placeholder\n";
    return 1;
}
