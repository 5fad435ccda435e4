#include "omrn/cli.hpp"

int main(int argc, char** argv) { return omrn::dispatch_main(argc, argv); }
