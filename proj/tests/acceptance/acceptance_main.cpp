// acceptance_main.cpp — integration suite: one pass/fail line per criterion.

#include "criteria.hpp"

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    std::string config_dir = "configs";
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--configs") == 0 && i + 1 < argc) {
            config_dir = argv[++i];
        } else {
            selected.push_back(std::atoi(argv[i]));
        }
    }
    return nshops::acceptance::run_all(config_dir, selected);
}
