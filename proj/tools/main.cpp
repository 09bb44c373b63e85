#include <malloc.h>

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
    // Training allocates and frees the same large buffers every step; keeping
    // them on the heap avoids mmap/munmap churn (~20% of wall time otherwise).
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    std::vector<std::string> args(argv + 1, argv + argc);
    return schedsynth::cli::run(args, std::cout, std::cerr);
}
