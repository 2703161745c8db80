#include "spdc/cli.hpp"

int main(int argc, char** argv)
{
    return spdc::cli_main(argc, argv);
}
