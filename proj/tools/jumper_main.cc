#include "jumper/harness.h"

int main(int argc, char** argv) { return jumper::RunCli(argc, argv); }
