#include "lipsync/cli.hpp"

int main(int argc, char** argv) {
    return lipsync::cli::run(argc, argv);
}
