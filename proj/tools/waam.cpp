#include "waam/cli.hpp"

int main(int argc, char** argv)
{
    return waam::cli::run(argc, argv);
}
