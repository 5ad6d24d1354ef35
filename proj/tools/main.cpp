#include "app.hpp"

int main(int argc, char** argv) { return chiron::app::run(argc, argv); }
