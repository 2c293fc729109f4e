#include "hicurate/pipeline.hpp"

int main(int argc, char** argv) { return hicurate::run_cli(argc, argv); }
