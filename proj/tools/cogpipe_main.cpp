#include <string>
#include <vector>

#include "cogpipe/cli.hpp"

int main(int argc, char** argv) {
    return cogpipe::cli::run(std::vector<std::string>(argv, argv + argc));
}
