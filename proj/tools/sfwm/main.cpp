#include "app.hpp"

int main(int argc, char** argv) { return sfwm::cli::run(argc, argv); }
