#include "routereceipt/cli.hpp"

int main(int argc, char** argv) {
    return routereceipt::cli::run(argc, argv, std::cout, std::cerr);
}
