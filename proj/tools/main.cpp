#include "fedara/cli.h"

int main(int argc, char** argv) {
    return fedara::run_cli(argc, argv);
}
